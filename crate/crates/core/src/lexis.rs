//! Java lexical analysis and per-sample "individual information".
//!
//! A sample is reduced to the frequencies of the Java reserved words it uses
//! plus five structural counters derived from curly brackets and a handful of
//! keyword families. Identifiers are deliberately ignored, so renaming
//! variables never changes a sample's features.

use alloc::collections::BTreeMap;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;

/// The 50 reserved words of Java, sorted. `true`, `false` and `null` are
/// literals and are not part of the set.
pub const RESERVED_WORDS: [&str; 50] = [
    "abstract",
    "assert",
    "boolean",
    "break",
    "byte",
    "case",
    "catch",
    "char",
    "class",
    "const",
    "continue",
    "default",
    "do",
    "double",
    "else",
    "enum",
    "extends",
    "final",
    "finally",
    "float",
    "for",
    "goto",
    "if",
    "implements",
    "import",
    "instanceof",
    "int",
    "interface",
    "long",
    "native",
    "new",
    "package",
    "private",
    "protected",
    "public",
    "return",
    "short",
    "static",
    "strictfp",
    "super",
    "switch",
    "synchronized",
    "this",
    "throw",
    "throws",
    "transient",
    "try",
    "void",
    "volatile",
    "while",
];

const LOOP_WORDS: [&str; 2] = ["for", "while"];
const FLOW_WORDS: [&str; 2] = ["if", "switch"];
const NUMERIC_WORDS: [&str; 6] = ["int", "double", "float", "byte", "short", "long"];

/// Returns the canonical `'static` spelling if `word` is a Java reserved word.
pub fn reserved_word(word: &str) -> Option<&'static str> {
    RESERVED_WORDS
        .binary_search(&word)
        .ok()
        .map(|i| RESERVED_WORDS[i])
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum LexError {
    EmptyInput,
    UnterminatedComment {
        offset: usize,
    },
    UnterminatedString {
        offset: usize,
    },
    UnterminatedChar {
        offset: usize,
    },
    /// Offset of the first closing brace without an opener, or of the
    /// outermost opening brace that is never closed.
    UnbalancedBraces {
        offset: usize,
    },
}

impl fmt::Display for LexError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LexError::EmptyInput => write!(f, "empty source text"),
            LexError::UnterminatedComment { offset } => {
                write!(f, "unterminated block comment starting at byte {offset}")
            }
            LexError::UnterminatedString { offset } => {
                write!(f, "unterminated string literal starting at byte {offset}")
            }
            LexError::UnterminatedChar { offset } => {
                write!(
                    f,
                    "unterminated character literal starting at byte {offset}"
                )
            }
            LexError::UnbalancedBraces { offset } => {
                write!(f, "unbalanced curly brackets at byte {offset}")
            }
        }
    }
}

impl core::error::Error for LexError {}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum TokenKind {
    Keyword,
    Identifier,
    Literal,
    Operator,
    Separator,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Token {
    pub kind: TokenKind,
    pub lexeme: String,
    /// Byte offset of the first character in the source text.
    pub offset: usize,
    /// 1-based line number.
    pub line: usize,
}

impl Token {
    pub fn is(&self, kind: TokenKind, lexeme: &str) -> bool {
        self.kind == kind && self.lexeme == lexeme
    }

    pub fn is_sep(&self, lexeme: &str) -> bool {
        self.is(TokenKind::Separator, lexeme)
    }
}

/// Tokens of one source fragment with comments removed and string/char
/// literal contents replaced by empty placeholders (`""`, `''`).
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct TokenStream {
    pub tokens: Vec<Token>,
}

impl TokenStream {
    pub fn count(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn iter(&self) -> core::slice::Iter<'_, Token> {
        self.tokens.iter()
    }

    pub fn keywords(&self) -> impl Iterator<Item = &Token> {
        self.tokens.iter().filter(|t| t.kind == TokenKind::Keyword)
    }
}

// Longest first so that maximal munch works with a linear scan.
const OPERATORS: [&str; 25] = [
    ">>>=", "<<=", ">>=", ">>>", "==", "<=", ">=", "!=", "&&", "||", "++", "--", "+=", "-=", "*=",
    "/=", "%=", "&=", "|=", "^=", "<<", ">>", "->", "::", "=",
];
const SEPARATORS: &str = "(){}[];,.";

struct Lexer<'a> {
    text: &'a str,
    bytes: &'a [u8],
    pos: usize,
    line: usize,
    out: Vec<Token>,
}

impl<'a> Lexer<'a> {
    fn new(text: &'a str) -> Self {
        Lexer {
            text,
            bytes: text.as_bytes(),
            pos: 0,
            line: 1,
            out: Vec::new(),
        }
    }

    fn peek(&self, ahead: usize) -> Option<u8> {
        self.bytes.get(self.pos + ahead).copied()
    }

    fn push(&mut self, kind: TokenKind, lexeme: &str, offset: usize, line: usize) {
        self.out.push(Token {
            kind,
            lexeme: lexeme.to_string(),
            offset,
            line,
        });
    }

    /// Advances over `n` bytes, counting newlines.
    fn bump(&mut self, n: usize) {
        for &b in &self.bytes[self.pos..self.pos + n] {
            if b == b'\n' {
                self.line += 1;
            }
        }
        self.pos += n;
    }

    fn run(mut self) -> Result<Vec<Token>, LexError> {
        while let Some(b) = self.peek(0) {
            let start = self.pos;
            let line = self.line;
            match b {
                b'\n' => {
                    self.line += 1;
                    self.pos += 1;
                }
                b' ' | b'\t' | b'\r' | 0x0c => self.pos += 1,
                b'/' if self.peek(1) == Some(b'/') => {
                    while let Some(c) = self.peek(0) {
                        if c == b'\n' {
                            break;
                        }
                        self.pos += 1;
                    }
                }
                b'/' if self.peek(1) == Some(b'*') => {
                    let end = self.text[start + 2..]
                        .find("*/")
                        .ok_or(LexError::UnterminatedComment { offset: start })?;
                    self.bump(end + 4);
                }
                b'"' if self.peek(1) == Some(b'"') && self.peek(2) == Some(b'"') => {
                    self.text_block(start)?;
                    self.push(TokenKind::Literal, "\"\"", start, line);
                }
                b'"' => {
                    self.quoted(b'"', start)?;
                    self.push(TokenKind::Literal, "\"\"", start, line);
                }
                b'\'' => {
                    self.quoted(b'\'', start)?;
                    self.push(TokenKind::Literal, "''", start, line);
                }
                b'0'..=b'9' => self.number(start, line),
                b'.' if matches!(self.peek(1), Some(b'0'..=b'9')) => self.number(start, line),
                b'.' if self.peek(1) == Some(b'.') && self.peek(2) == Some(b'.') => {
                    self.pos += 3;
                    self.push(TokenKind::Separator, "...", start, line);
                }
                _ if b.is_ascii_alphabetic() || b == b'_' || b == b'$' || b >= 0x80 => {
                    self.word(start, line)
                }
                _ => self.punct(start, line),
            }
        }
        Ok(self.out)
    }

    fn quoted(&mut self, quote: u8, start: usize) -> Result<(), LexError> {
        let err = if quote == b'"' {
            LexError::UnterminatedString { offset: start }
        } else {
            LexError::UnterminatedChar { offset: start }
        };
        self.pos += 1;
        loop {
            match self.peek(0) {
                None | Some(b'\n') => return Err(err),
                Some(b'\\') => {
                    if self.peek(1).is_none() {
                        return Err(err);
                    }
                    self.pos += 2;
                }
                Some(c) if c == quote => {
                    self.pos += 1;
                    return Ok(());
                }
                Some(_) => self.pos += 1,
            }
        }
    }

    fn text_block(&mut self, start: usize) -> Result<(), LexError> {
        self.pos += 3;
        loop {
            match self.peek(0) {
                None => return Err(LexError::UnterminatedString { offset: start }),
                Some(b'\\') => self.bump(2.min(self.bytes.len() - self.pos)),
                Some(b'"') if self.peek(1) == Some(b'"') && self.peek(2) == Some(b'"') => {
                    self.pos += 3;
                    return Ok(());
                }
                Some(_) => self.bump(1),
            }
        }
    }

    fn number(&mut self, start: usize, line: usize) {
        let hex = self.peek(0) == Some(b'0') && matches!(self.peek(1), Some(b'x' | b'X'));
        while let Some(c) = self.peek(0) {
            let exponent = if hex {
                matches!(c, b'p' | b'P')
            } else {
                matches!(c, b'e' | b'E')
            };
            if exponent && matches!(self.peek(1), Some(b'+' | b'-')) {
                self.pos += 2;
            } else if c.is_ascii_alphanumeric() || c == b'_' || c == b'.' {
                self.pos += 1;
            } else {
                break;
            }
        }
        let lexeme = &self.text[start..self.pos];
        self.push(TokenKind::Literal, lexeme, start, line);
    }

    fn word(&mut self, start: usize, line: usize) {
        let rest = &self.text[start..];
        let len = rest
            .char_indices()
            .find(|&(_, c)| !(c.is_alphanumeric() || c == '_' || c == '$'))
            .map(|(i, _)| i)
            .unwrap_or(rest.len());
        // A stray non-word, non-ASCII character: emit it on its own.
        let len = if len == 0 {
            rest.chars().next().map(char::len_utf8).unwrap_or(1)
        } else {
            len
        };
        self.pos += len;
        let lexeme = &rest[..len];
        let kind = if reserved_word(lexeme).is_some() {
            TokenKind::Keyword
        } else if matches!(lexeme, "true" | "false" | "null") {
            TokenKind::Literal
        } else if lexeme
            .chars()
            .next()
            .is_some_and(|c| c.is_alphabetic() || c == '_' || c == '$')
        {
            TokenKind::Identifier
        } else {
            TokenKind::Operator
        };
        self.push(kind, lexeme, start, line);
    }

    fn punct(&mut self, start: usize, line: usize) {
        let rest = &self.text[start..];
        if let Some(op) = OPERATORS.iter().find(|op| rest.starts_with(**op)) {
            self.pos += op.len();
            self.push(TokenKind::Operator, op, start, line);
            return;
        }
        let c = rest.chars().next().unwrap_or(' ');
        let len = c.len_utf8();
        self.pos += len;
        let lexeme = &rest[..len];
        let kind = if SEPARATORS.contains(c) {
            TokenKind::Separator
        } else {
            // includes unrecognised characters such as `#` or `\`
            TokenKind::Operator
        };
        self.push(kind, lexeme, start, line);
    }
}

/// Splits Java source into tokens.
///
/// Comments are dropped; string, text-block and character literals become a
/// single literal token with an empty placeholder lexeme.
pub fn tokenize(text: &str) -> Result<TokenStream, LexError> {
    if text.trim().is_empty() {
        return Err(LexError::EmptyInput);
    }
    Lexer::new(text).run().map(|tokens| TokenStream { tokens })
}

/// Tokenizes without rejecting blank input.
pub(crate) fn tokenize_lenient(text: &str) -> Result<TokenStream, LexError> {
    Lexer::new(text).run().map(|tokens| TokenStream { tokens })
}

/// Curly-bracket structure of a token stream.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct BraceProfile {
    pub max_depth: u32,
    /// Largest number of depth-2 groups sharing one depth-1 parent.
    pub max_parallel_depth2: u32,
}

/// Walks the braces of `stream`, failing on the first imbalance.
pub fn brace_profile(stream: &TokenStream) -> Result<BraceProfile, LexError> {
    let mut open: Vec<usize> = Vec::new();
    let mut profile = BraceProfile::default();
    let mut depth2_children = 0u32;
    for tok in stream.iter().filter(|t| t.kind == TokenKind::Separator) {
        match tok.lexeme.as_str() {
            "{" => {
                open.push(tok.offset);
                let depth = open.len() as u32;
                profile.max_depth = profile.max_depth.max(depth);
                match depth {
                    1 => depth2_children = 0,
                    2 => {
                        depth2_children += 1;
                        profile.max_parallel_depth2 =
                            profile.max_parallel_depth2.max(depth2_children);
                    }
                    _ => {}
                }
            }
            "}" => {
                let Some(_) = open.pop() else {
                    return Err(LexError::UnbalancedBraces { offset: tok.offset });
                };
            }
            _ => {}
        }
    }
    match open.first() {
        Some(&offset) => Err(LexError::UnbalancedBraces { offset }),
        None => Ok(profile),
    }
}

/// The five structural side-information metrics.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Metric {
    /// Maximum nesting depth of curly brackets.
    Mndcb,
    /// Maximum number of parallel curly-bracket groups at depth 2.
    Mnpcb,
    /// Loop keywords (`for`, `while`).
    Lri,
    /// Flow-control keywords (`if`, `switch`).
    Fci,
    /// Numeric type keywords (`int`, `double`, `float`, `byte`, `short`, `long`).
    Ndi,
}

impl Metric {
    pub const ALL: [Metric; 5] = [
        Metric::Mndcb,
        Metric::Mnpcb,
        Metric::Lri,
        Metric::Fci,
        Metric::Ndi,
    ];

    pub fn label(self) -> &'static str {
        match self {
            Metric::Mndcb => "MNDCB",
            Metric::Mnpcb => "MNPCB",
            Metric::Lri => "LRI",
            Metric::Fci => "FCI",
            Metric::Ndi => "NDI",
        }
    }

    pub fn from_label(label: &str) -> Option<Metric> {
        Metric::ALL.into_iter().find(|m| m.label() == label)
    }
}

/// Reserved-word frequencies plus the five side-information counters of one
/// sample.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct IndividualInfo {
    /// Only words that occur; every value is at least 1.
    pub keyword_counts: BTreeMap<&'static str, u32>,
    pub mndcb: u32,
    pub mnpcb: u32,
    pub lri: u32,
    pub fci: u32,
    pub ndi: u32,
}

impl IndividualInfo {
    pub fn metric(&self, m: Metric) -> u32 {
        match m {
            Metric::Mndcb => self.mndcb,
            Metric::Mnpcb => self.mnpcb,
            Metric::Lri => self.lri,
            Metric::Fci => self.fci,
            Metric::Ndi => self.ndi,
        }
    }

    /// True when the sample contributes no keyword and every metric is zero.
    pub fn is_empty(&self) -> bool {
        self.keyword_counts.is_empty() && Metric::ALL.iter().all(|&m| self.metric(m) == 0)
    }

    pub fn keyword_total(&self) -> u32 {
        self.keyword_counts.values().sum()
    }

    /// Tokenizes `text` and extracts its features in one step.
    pub fn from_text(text: &str) -> Result<Self, LexError> {
        let stream = tokenize(text)?;
        extract_individual_info(&stream)
    }
}

/// Computes keyword frequencies and side information from a token stream.
///
/// Fails only if the stream's curly brackets are unbalanced.
pub fn extract_individual_info(stream: &TokenStream) -> Result<IndividualInfo, LexError> {
    let braces = brace_profile(stream)?;
    let mut keyword_counts: BTreeMap<&'static str, u32> = BTreeMap::new();
    for tok in stream.keywords() {
        if let Some(word) = reserved_word(&tok.lexeme) {
            *keyword_counts.entry(word).or_insert(0) += 1;
        }
    }
    let family = |words: &[&str]| -> u32 {
        words
            .iter()
            .map(|w| keyword_counts.get(w).copied().unwrap_or(0))
            .sum()
    };
    Ok(IndividualInfo {
        mndcb: braces.max_depth,
        mnpcb: braces.max_parallel_depth2,
        lri: family(&LOOP_WORDS),
        fci: family(&FLOW_WORDS),
        ndi: family(&NUMERIC_WORDS),
        keyword_counts,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) const FUNC0: &str = "public static int fib(int i){
    int f1=0, f2=1, c=0;
    if((i == 0) || (i == 1)) return i;
    for (int j =2; j<=i; j++){
        c=f1+f2; f1=f2; f2=c;
    }
    return c;
}";

    const FUNC4: &str = "public static long calFib(long number){
    long f1=0, f2=1, c=0;
    switch(number){
        case 0:
            return 0;
        case 1:
            return 1;
        default:
            break;
    }
    while(number>=2){
        c=f1+f2; f1=f2; f2=c;
        number--;
    }
    return c;
}";

    fn keyword_multiset(text: &str) -> BTreeMap<&'static str, u32> {
        IndividualInfo::from_text(text).unwrap().keyword_counts
    }

    #[test]
    fn reserved_set_is_sorted_and_complete() {
        assert_eq!(RESERVED_WORDS.len(), 50);
        assert!(RESERVED_WORDS.windows(2).all(|w| w[0] < w[1]));
        assert!(reserved_word("goto").is_some());
        assert!(reserved_word("const").is_some());
        assert!(reserved_word("true").is_none());
        assert!(reserved_word("null").is_none());
    }

    #[test]
    fn func0_keywords() {
        let expected: BTreeMap<&str, u32> = [
            ("public", 1),
            ("static", 1),
            ("int", 4),
            ("if", 1),
            ("return", 2),
            ("for", 1),
        ]
        .into_iter()
        .collect();
        assert_eq!(keyword_multiset(FUNC0), expected);
    }

    #[test]
    fn func4_keywords() {
        let expected: BTreeMap<&str, u32> = [
            ("public", 1),
            ("static", 1),
            ("long", 3),
            ("switch", 1),
            ("case", 2),
            ("return", 3),
            ("default", 1),
            ("break", 1),
            ("while", 1),
        ]
        .into_iter()
        .collect();
        assert_eq!(keyword_multiset(FUNC4), expected);
    }

    #[test]
    fn func0_side_information() {
        let info = IndividualInfo::from_text(FUNC0).unwrap();
        assert_eq!(
            (info.mndcb, info.mnpcb, info.lri, info.fci, info.ndi),
            (2, 1, 1, 1, 4)
        );
    }

    #[test]
    fn func4_side_information() {
        let info = IndividualInfo::from_text(FUNC4).unwrap();
        assert_eq!(
            (info.mndcb, info.mnpcb, info.lri, info.fci, info.ndi),
            (2, 2, 1, 1, 3)
        );
    }

    #[test]
    fn one_line_body() {
        let info = IndividualInfo::from_text("int f(){return 0;}").unwrap();
        assert_eq!(
            (info.mndcb, info.mnpcb, info.lri, info.fci, info.ndi),
            (1, 0, 0, 0, 1)
        );
    }

    #[test]
    fn keywords_inside_literals_and_comments_are_ignored() {
        let stream =
            tokenize("void f() { String s = \"if(x)\"; char c = '{'; // while\n /* for */ }")
                .unwrap();
        assert!(stream
            .iter()
            .all(|t| t.lexeme != "if" && t.lexeme != "while" && t.lexeme != "for"));
        let info = extract_individual_info(&stream).unwrap();
        assert_eq!(info.mndcb, 1);
        assert_eq!(info.fci, 0);
    }

    #[test]
    fn operators_are_kept_whole() {
        let stream = tokenize("a == b && c <= d || e >= f; g++; h--; x >>>= 2;").unwrap();
        let ops: Vec<&str> = stream
            .iter()
            .filter(|t| t.kind == TokenKind::Operator)
            .map(|t| t.lexeme.as_str())
            .collect();
        assert_eq!(ops, ["==", "&&", "<=", "||", ">=", "++", "--", ">>>="]);
    }

    #[test]
    fn numeric_literals_are_single_tokens() {
        let stream = tokenize("x = 0x1F + 1_000L + 3.14e-5f + .5d;").unwrap();
        let lits: Vec<&str> = stream
            .iter()
            .filter(|t| t.kind == TokenKind::Literal)
            .map(|t| t.lexeme.as_str())
            .collect();
        assert_eq!(lits, ["0x1F", "1_000L", "3.14e-5f", ".5d"]);
    }

    #[test]
    fn annotation_is_operator_then_identifier() {
        let stream = tokenize("@Override public void run() {}").unwrap();
        assert!(stream.tokens[0].is(TokenKind::Operator, "@"));
        assert!(stream.tokens[1].is(TokenKind::Identifier, "Override"));
        let info = extract_individual_info(&stream).unwrap();
        assert_eq!(info.keyword_counts.len(), 2);
    }

    #[test]
    fn unterminated_constructs_report_offsets() {
        assert_eq!(
            tokenize("int x; /* open").unwrap_err(),
            LexError::UnterminatedComment { offset: 7 }
        );
        assert_eq!(
            tokenize("s = \"abc").unwrap_err(),
            LexError::UnterminatedString { offset: 4 }
        );
        assert_eq!(
            tokenize("c = 'a\n';").unwrap_err(),
            LexError::UnterminatedChar { offset: 4 }
        );
        assert_eq!(tokenize("  \n ").unwrap_err(), LexError::EmptyInput);
    }

    #[test]
    fn unbalanced_braces_are_rejected() {
        assert_eq!(
            IndividualInfo::from_text("void f() { }}").unwrap_err(),
            LexError::UnbalancedBraces { offset: 12 }
        );
        assert_eq!(
            IndividualInfo::from_text("void f() { {}").unwrap_err(),
            LexError::UnbalancedBraces { offset: 9 }
        );
    }

    #[test]
    fn text_blocks_and_escapes() {
        let stream = tokenize("s = \"\"\"\n if { \"\"\"; t = \"a\\\"b\"; c = '\\'';").unwrap();
        assert!(stream.iter().all(|t| t.lexeme != "if" && t.lexeme != "{"));
        assert_eq!(stream.tokens.last().unwrap().line, 2);
    }

    #[test]
    fn line_numbers_track_newlines() {
        let stream = tokenize(FUNC0).unwrap();
        assert_eq!(stream.tokens.first().unwrap().line, 1);
        assert_eq!(stream.tokens.last().unwrap().line, 8);
    }

    #[test]
    fn mnpcb_uses_the_widest_parent() {
        // two depth-1 groups with 1 and 3 depth-2 children
        let info = IndividualInfo::from_text("{ {} } { {} {} {{}} }").unwrap();
        assert_eq!(info.mndcb, 3);
        assert_eq!(info.mnpcb, 3);
    }
}
