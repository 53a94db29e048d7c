//! Small generated datasets with known structure.

use crate::data::Dataset;
use crate::matrix::RealMatrix;

/// `side x side` grid on the unit square at cell centres, labelled
/// `(x0 > 0.5) XOR (x1 > 0.5)`. No point lies on either boundary.
pub fn xor_grid(side: usize) -> Dataset {
    let mut data = Vec::with_capacity(side * side * 2);
    let mut y = Vec::with_capacity(side * side);
    for i in 0..side {
        for j in 0..side {
            let a = (i as f64 + 0.5) / side as f64;
            let b = (j as f64 + 0.5) / side as f64;
            data.push(a);
            data.push(b);
            y.push(usize::from((a > 0.5) != (b > 0.5)));
        }
    }
    let x = RealMatrix::from_vec(side * side, 2, data).expect("grid values are finite");
    Dataset::new(x, y, 2).expect("labels are binary")
}
