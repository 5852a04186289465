//! Line-oriented `key=value` log records on standard error.

use std::io::Write;
use std::sync::OnceLock;
use std::time::Instant;

use log::{Level, LevelFilter, Log, Metadata, Record};

struct KvLogger {
    level: LevelFilter,
    start: Instant,
}

impl Log for KvLogger {
    fn enabled(&self, metadata: &Metadata) -> bool {
        metadata.level() <= self.level
    }

    fn log(&self, record: &Record) {
        if !self.enabled(record.metadata()) {
            return;
        }
        let text = record.args().to_string();
        // structured events are already key=value; plain messages get a msg key
        let body = if text.starts_with("event=") {
            text
        } else {
            format!("msg={}", quote(&text))
        };
        let line = format!(
            "t={:.3} level={} target={} {body}\n",
            self.start.elapsed().as_secs_f64(),
            record.level().as_str().to_ascii_lowercase(),
            record.target(),
        );
        let _ = std::io::stderr().lock().write_all(line.as_bytes());
    }

    fn flush(&self) {}
}

/// Quotes a value when it contains spaces, quotes or `=`.
pub fn quote(value: &str) -> String {
    if !value.is_empty() && !value.contains([' ', '"', '=', '\t', '\n']) {
        return value.to_string();
    }
    let escaped = value
        .replace('\\', "\\\\")
        .replace('"', "\\\"")
        .replace('\n', "\\n");
    format!("\"{escaped}\"")
}

static LOGGER: OnceLock<KvLogger> = OnceLock::new();

/// Installs the logger once; later calls only adjust the level.
pub fn init(verbosity: u8) {
    let level = match verbosity {
        0 => LevelFilter::Info,
        1 => LevelFilter::Debug,
        _ => LevelFilter::Trace,
    };
    let logger = LOGGER.get_or_init(|| KvLogger {
        level: LevelFilter::Trace,
        start: Instant::now(),
    });
    if log::set_logger(logger).is_ok() || log::max_level() != level {
        log::set_max_level(level);
    }
}

/// Emits a structured record such as `event=stage name=embed secs=0.41`.
pub fn event(level: Level, name: &str, fields: &[(&str, String)]) {
    let mut body = format!("event={}", quote(name));
    for (k, v) in fields {
        body.push_str(&format!(" {k}={}", quote(v)));
    }
    log::log!(target: "graphclone", level, "{body}");
}

#[cfg(test)]
mod tests {
    use super::quote;

    #[test]
    fn quoting() {
        assert_eq!(quote("plain"), "plain");
        assert_eq!(quote("two words"), "\"two words\"");
        assert_eq!(quote("a=\"b\""), "\"a=\\\"b\\\"\"");
        assert_eq!(quote(""), "\"\"");
    }
}
