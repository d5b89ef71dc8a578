//! Minimal external forecaster speaking the line protocol: answers every
//! predict request by repeating the last context row.
//!
//! `--mode` selects a misbehaviour for exercising the adapter:
//! `short` (one row too few), `nan` (nulls), `stall` (never answers),
//! `crash` (exits on the first request), `garbage` (unparseable output).

use std::io::{self, BufRead, Write};
use std::{env, process, thread, time::Duration};

use serde_json::{json, Value};

fn main() {
    let mode = env::args()
        .skip_while(|a| a != "--mode")
        .nth(1)
        .unwrap_or_else(|| "persistence".into());
    let stdin = io::stdin();
    let mut out = io::stdout().lock();
    let mut horizon = 0usize;
    for line in stdin.lock().lines() {
        let Ok(line) = line else { break };
        let Ok(record) = serde_json::from_str::<Value>(&line) else {
            eprintln!("reference-client: unreadable input");
            process::exit(3);
        };
        match record["type"].as_str() {
            Some("init") => horizon = record["H"].as_u64().unwrap_or(0) as usize,
            Some("predict") => {
                let id = record["id"].clone();
                let last = record["context"]
                    .as_array()
                    .and_then(|rows| rows.last())
                    .cloned()
                    .unwrap_or(Value::Null);
                let width = last.as_array().map_or(0, Vec::len);
                let reply = match mode.as_str() {
                    "short" => {
                        json!({"type": "prediction", "id": id, "values": vec![last; horizon.saturating_sub(1)]})
                    }
                    "nan" => {
                        json!({"type": "prediction", "id": id, "values": vec![vec![Value::Null; width]; horizon]})
                    }
                    "stall" => loop {
                        thread::sleep(Duration::from_secs(3600));
                    },
                    "crash" => process::exit(1),
                    "garbage" => {
                        writeln!(out, "not a record").ok();
                        out.flush().ok();
                        continue;
                    }
                    _ => json!({"type": "prediction", "id": id, "values": vec![last; horizon]}),
                };
                writeln!(out, "{reply}").ok();
                out.flush().ok();
            }
            _ => {
                eprintln!("reference-client: unexpected record");
                process::exit(3);
            }
        }
    }
}
