//! Brace-depth heuristic that cuts a Java file into method-level fragments.
//!
//! Not a parser. A `{` that appears outside any method opens a method when the
//! tokens since the previous `;`, `{` or `}` look like
//! `<annotations/modifiers> <type tokens> <name> ( ... ) [throws ...]`.
//! The method then extends to the matching `}`; everything nested inside it
//! (local classes, lambdas, anonymous classes) stays part of its text.
//! Methods of anonymous classes that live in field initializers are reported
//! as methods of their own.

use alloc::string::String;
use alloc::vec::Vec;

use crate::lexis::{tokenize_lenient, LexError, Token, TokenKind};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MethodSpan {
    /// Method name, empty if it could not be inferred.
    pub name: String,
    /// 1-based inclusive line range.
    pub start_line: usize,
    pub end_line: usize,
    /// The full source lines `start_line..=end_line`.
    pub text: String,
}

/// Finds method candidates in `file_text`, in source order.
pub fn split_methods(file_text: &str) -> Result<Vec<MethodSpan>, LexError> {
    let tokens = tokenize_lenient(file_text)?.tokens;
    check_balance(&tokens)?;

    let mut out = Vec::new();
    let mut segment_start = 0;
    let mut i = 0;
    while i < tokens.len() {
        let tok = &tokens[i];
        if tok.kind == TokenKind::Separator {
            match tok.lexeme.as_str() {
                "{" => {
                    let segment = &tokens[segment_start..i];
                    if let Some(name) = method_name(segment) {
                        let close = matching_brace(&tokens, i)
                            .ok_or(LexError::UnbalancedBraces { offset: tok.offset })?;
                        let start_line = segment[0].line;
                        let end_line = tokens[close].line;
                        out.push(MethodSpan {
                            name: String::from(name),
                            start_line,
                            end_line,
                            text: String::from(line_range(file_text, start_line, end_line)),
                        });
                        i = close + 1;
                        segment_start = i;
                        continue;
                    }
                    segment_start = i + 1;
                }
                "}" | ";" => segment_start = i + 1,
                _ => {}
            }
        }
        i += 1;
    }
    Ok(out)
}

/// Name of the first method found in `text`, or an empty string.
pub fn first_method_name(text: &str) -> String {
    split_methods(text)
        .ok()
        .and_then(|m| m.into_iter().next())
        .map(|m| m.name)
        .unwrap_or_default()
}

/// Byte slice of lines `start..=end` (1-based) without the final line
/// terminator. Out-of-range lines are clamped.
pub fn line_range(text: &str, start: usize, end: usize) -> &str {
    let mut line = 1;
    let mut begin = if start <= 1 { Some(0) } else { None };
    let mut finish = text.len();
    for (idx, b) in text.bytes().enumerate() {
        if b == b'\n' {
            if line == end {
                finish = idx;
                break;
            }
            line += 1;
            if line == start {
                begin = Some(idx + 1);
            }
        }
    }
    let begin = begin.unwrap_or(text.len()).min(finish);
    &text[begin..finish]
}

fn check_balance(tokens: &[Token]) -> Result<(), LexError> {
    let mut open = Vec::new();
    for tok in tokens.iter().filter(|t| t.kind == TokenKind::Separator) {
        match tok.lexeme.as_str() {
            "{" => open.push(tok.offset),
            "}" if open.pop().is_none() => {
                return Err(LexError::UnbalancedBraces { offset: tok.offset })
            }
            _ => {}
        }
    }
    match open.first() {
        Some(&offset) => Err(LexError::UnbalancedBraces { offset }),
        None => Ok(()),
    }
}

fn matching_brace(tokens: &[Token], open: usize) -> Option<usize> {
    let mut depth = 0usize;
    for (j, tok) in tokens.iter().enumerate().skip(open) {
        if tok.is_sep("{") {
            depth += 1;
        } else if tok.is_sep("}") {
            depth -= 1;
            if depth == 0 {
                return Some(j);
            }
        }
    }
    None
}

const MODIFIERS: [&str; 11] = [
    "public",
    "protected",
    "private",
    "static",
    "final",
    "abstract",
    "synchronized",
    "native",
    "strictfp",
    "default",
    "transient",
];

const TYPE_KEYWORDS: [&str; 11] = [
    "void", "int", "long", "short", "byte", "char", "boolean", "float", "double", "extends",
    "super",
];

fn allowed_in_prefix(tok: &Token) -> bool {
    match tok.kind {
        TokenKind::Identifier => true,
        TokenKind::Keyword => {
            MODIFIERS.contains(&tok.lexeme.as_str()) || TYPE_KEYWORDS.contains(&tok.lexeme.as_str())
        }
        TokenKind::Separator => matches!(tok.lexeme.as_str(), "." | "," | "[" | "]"),
        TokenKind::Operator => matches!(tok.lexeme.as_str(), "<" | ">" | ">>" | ">>>" | "?" | "&"),
        TokenKind::Literal => false,
    }
}

fn allowed_in_params(tok: &Token) -> bool {
    match tok.kind {
        TokenKind::Separator => {
            matches!(tok.lexeme.as_str(), "..." | "(" | ")") || allowed_in_prefix(tok)
        }
        TokenKind::Operator => tok.lexeme == "@" || allowed_in_prefix(tok),
        _ => allowed_in_prefix(tok),
    }
}

/// Drops `@Name`, `@a.b.Name` and `@Name(...)` annotations.
fn strip_annotations(segment: &[Token]) -> Vec<&Token> {
    let mut out = Vec::with_capacity(segment.len());
    let mut i = 0;
    while i < segment.len() {
        let tok = &segment[i];
        let is_annotation = tok.is(TokenKind::Operator, "@")
            && segment
                .get(i + 1)
                .is_some_and(|t| t.kind == TokenKind::Identifier);
        if !is_annotation {
            out.push(tok);
            i += 1;
            continue;
        }
        i += 2;
        while i + 1 < segment.len()
            && segment[i].is_sep(".")
            && segment[i + 1].kind == TokenKind::Identifier
        {
            i += 2;
        }
        if segment.get(i).is_some_and(|t| t.is_sep("(")) {
            let mut depth = 0usize;
            while i < segment.len() {
                if segment[i].is_sep("(") {
                    depth += 1;
                } else if segment[i].is_sep(")") {
                    depth -= 1;
                    if depth == 0 {
                        i += 1;
                        break;
                    }
                }
                i += 1;
            }
        }
    }
    out
}

/// Returns the method name if `segment` (the tokens before a `{`) is a
/// method or constructor signature.
fn method_name(segment: &[Token]) -> Option<&str> {
    let toks = strip_annotations(segment);
    let close = toks.iter().rposition(|t| t.is_sep(")"))?;

    // Optional `throws A, b.C<D>` clause after the parameter list.
    let tail = &toks[close + 1..];
    if let Some((first, rest)) = tail.split_first() {
        if !first.is(TokenKind::Keyword, "throws") || rest.is_empty() {
            return None;
        }
        if !rest.iter().all(|t| {
            t.kind == TokenKind::Identifier
                || matches!(t.lexeme.as_str(), "." | "," | "<" | ">" | ">>" | "?")
        }) {
            return None;
        }
    }

    let mut depth = 0usize;
    let mut open = None;
    for j in (0..=close).rev() {
        if toks[j].is_sep(")") {
            depth += 1;
        } else if toks[j].is_sep("(") {
            depth -= 1;
            if depth == 0 {
                open = Some(j);
                break;
            }
        }
    }
    let open = open?;
    if open == 0 {
        return None;
    }
    let name = toks[open - 1];
    if name.kind != TokenKind::Identifier {
        return None;
    }
    let params = &toks[open + 1..close];
    if !params.iter().all(|t| allowed_in_params(t)) {
        return None;
    }
    // An empty prefix is a constructor without modifiers.
    let prefix = &toks[..open - 1];
    if prefix.first().is_some_and(|t| t.is_sep(",")) || !prefix.iter().all(|t| allowed_in_prefix(t))
    {
        return None;
    }
    Some(name.lexeme.as_str())
}

#[cfg(test)]
mod tests {
    use super::*;

    const FUNC0: &str = "public static int fib(int i){
    int f1=0, f2=1, c=0;
    if((i == 0) || (i == 1)) return i;
    for (int j =2; j<=i; j++){
        c=f1+f2; f1=f2; f2=c;
    }
    return c;
}";

    const FUNC3: &str = "public static int calFib(int num){
    int fib1=0, fib2=1, t=0;
    if((num == 1) || (num == 0)) return num;
    for (int k =2; k<=num; k++){
        t=fib1+fib2; fib1=fib2; fib2=t;
    }
    return t;
}";

    #[test]
    fn single_function() {
        let spans = split_methods(FUNC0).unwrap();
        assert_eq!(spans.len(), 1);
        assert_eq!(spans[0].name, "fib");
        assert_eq!((spans[0].start_line, spans[0].end_line), (1, 8));
        assert_eq!(spans[0].text, FUNC0);
    }

    #[test]
    fn fields_only() {
        let text =
            "class A {\n  int x = 1;\n  static final String Y = \"{\";\n  int[] z = {1, 2};\n}\n";
        assert!(split_methods(text).unwrap().is_empty());
    }

    #[test]
    fn class_with_two_methods() {
        let text = alloc::format!("public class Fib {{\n{FUNC0}\n\n{FUNC3}\n}}\n");
        let spans = split_methods(&text).unwrap();
        let names: Vec<&str> = spans.iter().map(|s| s.name.as_str()).collect();
        assert_eq!(names, ["fib", "calFib"]);
        assert_eq!((spans[0].start_line, spans[0].end_line), (2, 9));
        assert_eq!((spans[1].start_line, spans[1].end_line), (11, 18));
        assert_eq!(spans[1].text, FUNC3);
    }

    #[test]
    fn annotations_throws_generics_and_constructors() {
        let text = "class A<T> {
    @Override
    @SuppressWarnings(\"unchecked\")
    public <K extends Comparable<K>> java.util.Map<K, List<T>> group(List<T> xs) throws java.io.IOException, X {
        return null;
    }
    A(int x) { this.x = x; }
    public A() { }
    static { init(); }
    int[] arr() { return new int[] {1}; }
}";
        let spans = split_methods(text).unwrap();
        let names: Vec<&str> = spans.iter().map(|s| s.name.as_str()).collect();
        assert_eq!(names, ["group", "A", "A", "arr"]);
        assert_eq!(spans[0].start_line, 2);
    }

    #[test]
    fn nested_constructs_stay_inside() {
        let text = "class A {
    void outer() {
        Runnable r = new Runnable() {
            public void run() { if (x) { y(); } }
        };
        list.forEach(v -> { process(v); });
        class Local { void inner() {} }
    }
    void next() {}
}";
        let spans = split_methods(text).unwrap();
        let names: Vec<&str> = spans.iter().map(|s| s.name.as_str()).collect();
        assert_eq!(names, ["outer", "next"]);
        assert_eq!((spans[0].start_line, spans[0].end_line), (2, 8));
    }

    #[test]
    fn anonymous_class_in_field_initializer() {
        let text = "class A {
    Runnable r = new Runnable() {
        public void run() { go(); }
    };
}";
        let spans = split_methods(text).unwrap();
        assert_eq!(spans.len(), 1);
        assert_eq!(spans[0].name, "run");
    }

    #[test]
    fn control_flow_is_not_a_signature() {
        let text = "if (a) { b(); } else if (c) { d(); } while (x) { } synchronized (l) { } try { } catch (E e) { }";
        assert!(split_methods(text).unwrap().is_empty());
    }

    #[test]
    fn unbalanced_reports_offset() {
        assert_eq!(
            split_methods("class A { void f() { }").unwrap_err(),
            LexError::UnbalancedBraces { offset: 8 }
        );
        assert_eq!(
            split_methods("void f() { } }").unwrap_err(),
            LexError::UnbalancedBraces { offset: 13 }
        );
    }

    #[test]
    fn line_range_slices() {
        let text = "a\nbb\r\nccc\n";
        assert_eq!(line_range(text, 1, 1), "a");
        assert_eq!(line_range(text, 2, 3), "bb\r\nccc");
        assert_eq!(line_range(text, 3, 3), "ccc");
        assert_eq!(line_range(text, 4, 4), "");
    }
}
