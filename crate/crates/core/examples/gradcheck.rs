//! Finite-difference check of every layer, both losses, Adam and the three
//! architectures. Pass `conv1d` as the first argument to corrupt the convolution's
//! backward pass and watch the suite catch it.

use acpclass::selfcheck::{run_suite, SuiteOptions};

fn main() -> acpclass::Result<()> {
    let fault = std::env::args().nth(1).map(|s| s.parse()).transpose()?;
    let report = run_suite(&SuiteOptions {
        fault,
        ..SuiteOptions::default()
    });
    print!("{}", report.render());
    if !report.passed() {
        println!("failed: {}", report.failures().join(", "));
    }
    Ok(())
}
