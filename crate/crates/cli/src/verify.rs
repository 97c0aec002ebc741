//! The `verify` command: oracle suites with a pass/fail line per check.

use selfreg::oracle::suite::{gradient_suite, toy_suite, GRAD_TOLERANCE};

use crate::error::{CliError, CliResult};

fn line(ok: bool, what: &str, detail: String) -> bool {
    eprintln!("[{}] {what}: {detail}", if ok { "pass" } else { "FAIL" });
    ok
}

pub fn run(grad_cases: u64, repeats: u64) -> CliResult<()> {
    if grad_cases == 0 || repeats == 0 {
        return Err(CliError::Usage("grad-cases and repeats must be positive".into()));
    }
    let mut ok = true;
    let grads = gradient_suite(grad_cases)?;
    let worst = grads.cases.iter().max_by(|a, b| a.max_rel_error.total_cmp(&b.max_rel_error));
    ok &= line(
        grads.passed(),
        "gradient check",
        format!(
            "{} networks, max relative error {:.2e} (limit {GRAD_TOLERANCE:.0e}, worst case seed {})",
            grads.cases.len(),
            grads.max_rel_error(),
            worst.map_or(0, |w| w.seed)
        ),
    );

    let toys = toy_suite(repeats)?;
    ok &= line(
        toys.variance.passed(),
        "SGLD stationary variance",
        format!("{:.5} vs analytic {:.5}", toys.variance.empirical, toys.variance.analytic),
    );
    for case in &toys.regression {
        ok &= line(
            case.passed(),
            &format!("linear regression d={}", case.dim),
            format!("mean lambda {:.3} vs d/2 = {}", case.mean(), case.target()),
        );
    }
    let p = &toys.product;
    ok &= line(
        p.passed(),
        "product model",
        format!(
            "mean lambda {:.3} vs 0.5 (quadrature at this n: {:.3}); below 1 in {}/{} repeats",
            p.mean(),
            p.quadrature.iter().sum::<f64>() / p.quadrature.len() as f64,
            p.below_regular(),
            p.estimates.len()
        ),
    );
    if ok {
        Ok(())
    } else {
        Err(CliError::Runtime("verification failed".into()))
    }
}
