//! Solve the Lyapunov equation for the spring benchmark and derive the
//! comparison functions, Δ and the ultimate bound.
//!
//!     cargo run --example lyapunov_design

use evtrack::bounds::certificate_delta;
use evtrack::lyapunov::{
    lyapunov_residual, radius_for_ultimate_bound, ultimate_bound, BetaConvention,
    LyapunovCertificate,
};
use evtrack::systems::NonlinearSpring;
use nalgebra::DMatrix;

fn main() -> evtrack::Result<()> {
    let spring = NonlinearSpring::new([-20.0, -20.0])?;
    let a_tilde = spring.a_tilde();
    let h = DMatrix::identity(2, 2);
    let cert = spring.certificate(&h, BetaConvention::AbsorbInput)?;

    println!("closed-loop error matrix{a_tilde}");
    println!("P{}", cert.p());
    println!("residual |PA + A'P + H| = {:.2e}", lyapunov_residual(cert.p(), &a_tilde, &h));
    println!("lambda_min = {:.6}, lambda_max = {:.6}", cert.lambda_min(), cert.lambda_max());
    println!("|PB| = {:.6}, beta(s) = {:.6} s", cert.norm_pb(), cert.beta_slope());

    let r = 0.0154;
    let r1 = ultimate_bound(r, cert.alpha1(), cert.alpha2())?;
    println!("r = {r} -> r1 = {r1:.6}");
    let back = radius_for_ultimate_bound(0.1, cert.alpha1(), cert.alpha2())?;
    println!("target r1 = 0.1 -> r = {back:.6}");

    let mu0 = cert.level_radius(4.43);
    let delta = certificate_delta(&cert, 0.95, r, mu0)?;
    println!("delta over [{r}, {mu0:.3}] = {delta:.6}");

    // the full-gradient envelope is larger, so the same r gives a smaller delta
    let wide = spring.certificate(&h, BetaConvention::FullGradient)?;
    let delta_wide = certificate_delta(&wide, 0.95, r, mu0)?;
    println!("delta with beta = 2|P| s: {delta_wide:.6}");
    Ok(())
}
