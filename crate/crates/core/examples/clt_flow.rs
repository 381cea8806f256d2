// Central-limit flow f ↦ Conv f from the indicator of [−1, 1]: the
// covariance stays at 1/3 and the iterates approach N(0, 1/3).

use gclab::grid::{clt_flow, GriddedFunction};

fn main() -> gclab::Result<()> {
    let f = GriddedFunction::indicator_box(1, 1.0, 12.0 / 3f64.sqrt(), 1025)?;
    let state = clt_flow(&[f], 10)?;
    for (k, (c, l1)) in state.covariances.iter().zip(&state.l1_to_gaussian).enumerate() {
        println!("iter {k:2}  var = {:.14}  L1 to Gaussian = {:.3e}", c[0].get(0, 0), l1[0]);
    }
    println!("covariance drift {:.2e}", state.covariance_drift());
    Ok(())
}
