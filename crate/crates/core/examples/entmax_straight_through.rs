//! Feature selection and split routing: sparse entmax weights, the hard
//! one-hot used in the forward pass, and the gradient that flows back anyway.

use gdtree::diff::{entmax15, entmax15_vjp, hardmax_st, round_st, sigmoid, sigmoid_grad, st_backward};

fn main() -> gdtree::Result<()> {
    let logits = [1.2, 0.9, -0.5, 0.1];
    let weights = entmax15(&logits)?;
    println!("logits          {logits:?}");
    println!("entmax weights  {weights:.4?}");
    println!("hard selection  {:?}", hardmax_st(&weights)?);

    // upstream gradient on the selection reaches every supported logit
    let upstream = [1.0, 0.0, 0.0, 0.0];
    println!("logit gradient  {:.4?}", entmax15_vjp(&weights, &upstream)?);

    for z in [-0.3, 0.0, 0.4] {
        let s = sigmoid(z);
        println!(
            "z = {z:+.1}: soft split {s:.3}, hard split {}, local gradient {:.3}",
            round_st(s)?,
            st_backward(1.0) * sigmoid_grad(s)
        );
    }
    Ok(())
}
