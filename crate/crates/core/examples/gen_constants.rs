//! Regenerates `src/functionals/constants.rs`:
//!
//!     cargo run -p subspec --example gen_constants --release > src/functionals/constants.rs

use subspec::functionals::inequalities::{
    calibrate_row, DEFAULT_CALIBRATION_SAMPLES, DEFAULT_CALIBRATION_SEED,
};

pub const GRID: [f64; 16] = [
    1.1, 1.2, 1.3, 1.4, 1.5, 1.6, 1.75, 2.0, 2.5, 3.0, 3.5, 4.0, 5.0, 6.0, 8.0, 10.0,
];

fn lit(v: Option<f64>) -> String {
    match v {
        Some(x) => format!("Some({x:?})"),
        None => "None".into(),
    }
}

fn main() {
    println!("// @generated by `cargo run -p subspec --example gen_constants --release`.");
    println!("// {DEFAULT_CALIBRATION_SAMPLES} samples per inequality, seed {DEFAULT_CALIBRATION_SEED:#x}.");
    println!("use super::inequalities::CalibrationRow;");
    println!();
    println!("pub static SHIPPED: &[CalibrationRow] = &[");
    for p in GRID {
        let r = calibrate_row(p, DEFAULT_CALIBRATION_SAMPLES, DEFAULT_CALIBRATION_SEED);
        println!(
            "    CalibrationRow {{ p: {:?}, c51: {}, c52: {}, c53: {}, c54: {} }},",
            p,
            lit(r.c51),
            lit(r.c52),
            lit(r.c53),
            lit(r.c54)
        );
    }
    println!("];");
}
