//! Backpropagation against central differences on a 16-parameter network.

use ami_mortality::learners::fnn::{fnn_backprop, fnn_loss, FnnParams};
use ndarray::array;

fn main() {
    let mut params = FnnParams::init(1, 3);
    params.b1 = array![0.3, -0.2];
    params.b2 = array![0.1, 0.4];
    let x = array![[-1.5], [-0.4], [0.2], [0.9], [1.7]];
    let y = [true, false, true, false, true];

    let (grad, loss) = fnn_backprop(&params, x.view(), &y);
    println!("{} parameters, loss {loss:.6}", params.n_parameters());
    let h = 1e-6;
    let mut worst: f64 = 0.0;
    for (k, analytic) in grad.flat().into_iter().enumerate() {
        let mut plus = params.clone();
        *plus.flat_mut()[k] += h;
        let mut minus = params.clone();
        *minus.flat_mut()[k] -= h;
        let numeric = (fnn_loss(&plus, x.view(), &y) - fnn_loss(&minus, x.view(), &y)) / (2.0 * h);
        let rel = (numeric - analytic).abs() / numeric.abs().max(analytic.abs()).max(1e-7);
        worst = worst.max(rel);
        println!("θ{k:<2} analytic {analytic:>12.8}  numeric {numeric:>12.8}  rel {rel:.1e}");
    }
    println!("max relative error {worst:.2e}");
}
