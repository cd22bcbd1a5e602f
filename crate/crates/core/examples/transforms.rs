//! The desingularizing changes of variable: a few values, then the full
//! round-trip / derivative sweep over `10⁴` points per transform.

use singular_bsde::transforms::{LogAffineTransform, PowerTransform, Transform};
use singular_bsde::verify::transform_suite;

fn main() -> singular_bsde::Result<()> {
    let u = PowerTransform::new(1.0)?;
    let h = LogAffineTransform::new(1.0)?;
    for y in [0.25, 1.0, 4.0] {
        let (uy, hy) = (u.eval(y)?, h.eval(y)?);
        println!(
            "y={y:<5} u={uy:+.5} u'={:.5} u^-1(u)={:.15}   H={hy:+.5} H^-1(H)={:.15}",
            u.derivative(y, 1)?,
            u.invert(uy)?,
            h.invert(hy)?
        );
    }
    println!();
    for t in transform_suite(10_000, 1)? {
        println!(
            "{:<6} {:<32} roundtrip {:.2e} ({} bad)  fd {:.2e} ({} bad)",
            if t.pass { "ok" } else { "FAIL" },
            t.name,
            t.roundtrip_max,
            t.roundtrip_failures,
            t.fd_max,
            t.fd_failures
        );
    }
    Ok(())
}
