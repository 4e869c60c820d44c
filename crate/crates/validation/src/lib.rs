//! Report formatting shared by the acceptance suite.

use std::io::Write;

/// Writes one `PASS`/`FAIL` line for a criterion and returns `pass`.
///
/// The line goes straight to the process stderr so that it shows up even
/// when the test harness captures output.
pub fn report(id: u32, title: &str, pass: bool, detail: &str) -> bool {
    let line = format!("{} [{id}] {title}: {detail}\n", if pass { "PASS" } else { "FAIL" });
    let _ = std::io::stderr().lock().write_all(line.as_bytes());
    pass
}

/// |a/b − 1|.
pub fn rel(a: f64, b: f64) -> f64 {
    (a / b - 1.0).abs()
}
