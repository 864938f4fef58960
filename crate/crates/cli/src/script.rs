//! The line-oriented command language read by `slsm run`.
//!
//! ```text
//! p <key> <value>   put
//! g <key>           get: prints the value, or an empty line
//! r <lo> <hi>       range [lo, hi): prints "k:v k:v ..." on one line
//! d <key>           delete
//! q                 stop reading
//! ```

use std::fmt;
use std::io::{BufRead, Write};

use slsm::{Engine, Key, Value};

use crate::error::Result;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Command {
    Put(Key, Value),
    Get(Key),
    Range(Key, Key),
    Delete(Key),
    Quit,
}

impl fmt::Display for Command {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            Command::Put(k, v) => write!(f, "p {k} {v}"),
            Command::Get(k) => write!(f, "g {k}"),
            Command::Range(lo, hi) => write!(f, "r {lo} {hi}"),
            Command::Delete(k) => write!(f, "d {k}"),
            Command::Quit => f.write_str("q"),
        }
    }
}

#[derive(Debug, PartialEq, Eq, thiserror::Error)]
pub enum ParseError {
    #[error("unknown command {0:?}")]
    Unknown(String),
    #[error("{cmd} takes {want} argument(s), got {got}")]
    Arity { cmd: char, want: usize, got: usize },
    #[error("bad integer {0:?}")]
    Number(String),
}

fn int(tok: &str) -> Result<i32, ParseError> {
    tok.parse().map_err(|_| ParseError::Number(tok.to_string()))
}

/// Parses one line. Blank lines yield `None`.
pub fn parse_line(line: &str) -> Result<Option<Command>, ParseError> {
    let mut toks = line.split_whitespace();
    let Some(head) = toks.next() else {
        return Ok(None);
    };
    let args: Vec<&str> = toks.collect();
    let (cmd, want) = match head {
        "p" => ('p', 2),
        "g" => ('g', 1),
        "r" => ('r', 2),
        "d" => ('d', 1),
        "q" => ('q', 0),
        other => return Err(ParseError::Unknown(other.to_string())),
    };
    if args.len() != want {
        return Err(ParseError::Arity {
            cmd,
            want,
            got: args.len(),
        });
    }
    Ok(Some(match cmd {
        'p' => Command::Put(int(args[0])?, int(args[1])?),
        'g' => Command::Get(int(args[0])?),
        'r' => Command::Range(int(args[0])?, int(args[1])?),
        'd' => Command::Delete(int(args[0])?),
        _ => Command::Quit,
    }))
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct ScriptStats {
    pub executed: usize,
    pub skipped: usize,
}

pub fn write_range(out: &mut impl Write, pairs: &[(Key, Value)]) -> std::io::Result<()> {
    for (i, (k, v)) in pairs.iter().enumerate() {
        if i > 0 {
            out.write_all(b" ")?;
        }
        write!(out, "{k}:{v}")?;
    }
    out.write_all(b"\n")
}

/// Executes one command, writing any output line.
pub fn execute(engine: &mut Engine, cmd: Command, out: &mut impl Write) -> Result<()> {
    match cmd {
        Command::Put(k, v) => engine.put(k, v)?,
        Command::Delete(k) => engine.delete(k)?,
        Command::Get(k) => match engine.get(k)? {
            Some(v) => writeln!(out, "{v}")?,
            None => writeln!(out)?,
        },
        Command::Range(lo, hi) => write_range(out, &engine.range(lo, hi)?)?,
        Command::Quit => {}
    }
    Ok(())
}

/// Runs a script to completion or the first `q`. Malformed lines and empty
/// ranges are reported on `diag` and skipped; engine failures abort.
pub fn run_script(
    input: impl BufRead,
    engine: &mut Engine,
    out: &mut impl Write,
    diag: &mut impl Write,
) -> Result<ScriptStats> {
    let mut stats = ScriptStats::default();
    for (n, line) in input.lines().enumerate() {
        let line = line?;
        let cmd = match parse_line(&line) {
            Ok(Some(cmd)) => cmd,
            Ok(None) => continue,
            Err(e) => {
                writeln!(diag, "line {}: {e}", n + 1)?;
                stats.skipped += 1;
                continue;
            }
        };
        if cmd == Command::Quit {
            break;
        }
        if let Command::Range(lo, hi) = cmd {
            if lo > hi {
                writeln!(diag, "line {}: range {lo} {hi} is empty (lo > hi)", n + 1)?;
                stats.skipped += 1;
                continue;
            }
        }
        execute(engine, cmd, out)?;
        stats.executed += 1;
    }
    out.flush()?;
    Ok(stats)
}
