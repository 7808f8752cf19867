//! Fits convergence rates to a `records.csv` written by `layerfem run`.
//!
//! ```text
//! cargo run --example rate_fit -- out/records.csv 8
//! ```

use std::path::PathBuf;

use layerfem::io::{read_records, rate_fit};

fn main() -> layerfem::Result<()> {
    let mut args = std::env::args().skip(1);
    let path = PathBuf::from(args.next().unwrap_or_else(|| "out/records.csv".into()));
    let window = args.next().and_then(|w| w.parse().ok());
    let rows = read_records(&path)?;
    println!("{} rows, {} with delta = 1", rows.len(), rows.iter().filter(|r| r.delta == 1.0).count());
    match rate_fit(&rows, window) {
        Ok(fit) => println!("{}", serde_json::to_string_pretty(&fit).expect("plain data")),
        Err(e) => println!("no fit: {e}"),
    }
    Ok(())
}
