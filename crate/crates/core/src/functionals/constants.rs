// @generated by `cargo run -p subspec --example gen_constants --release`.
// 1000000 samples per inequality, seed 0x5eedc0de.
use super::inequalities::CalibrationRow;

pub static SHIPPED: &[CalibrationRow] = &[
    CalibrationRow { p: 1.1, c51: Some(1.884726642904351), c52: None, c53: Some(0.18473824373754374), c54: None },
    CalibrationRow { p: 1.2, c51: Some(1.758512137858171), c52: None, c53: Some(0.3447377162827915), c54: None },
    CalibrationRow { p: 1.3, c51: Some(1.6407498406395957), c52: None, c53: Some(0.4824775725619549), c54: None },
    CalibrationRow { p: 1.4, c51: Some(1.5308737321755022), c52: None, c53: Some(0.6002225404014545), c54: None },
    CalibrationRow { p: 1.5, c51: Some(1.4283556979968262), c52: None, c53: Some(0.7000354613841441), c54: None },
    CalibrationRow { p: 1.6, c51: Some(1.332702989880623), c52: None, c53: Some(0.7837873373118258), c54: None },
    CalibrationRow { p: 1.75, c51: Some(1.2010991861527482), c52: None, c53: Some(0.8829860894061008), c54: None },
    CalibrationRow { p: 2.0, c51: Some(1.01), c52: Some(1.01), c53: Some(0.99), c54: Some(0.9899999999999998) },
    CalibrationRow { p: 2.5, c51: None, c52: Some(1.0712669108781512), c53: None, c54: Some(0.700035713374682) },
    CalibrationRow { p: 3.0, c51: None, c52: Some(1.010000042955947), c53: None, c54: Some(0.49499999999999994) },
    CalibrationRow { p: 3.5, c51: None, c52: Some(1.01), c53: None, c54: Some(0.350017856687341) },
    CalibrationRow { p: 4.0, c51: None, c52: Some(1.01), c53: None, c54: Some(0.2475) },
    CalibrationRow { p: 5.0, c51: None, c52: Some(1.01), c53: None, c54: Some(0.12375) },
    CalibrationRow { p: 6.0, c51: None, c52: Some(1.01), c53: None, c54: Some(0.061875) },
    CalibrationRow { p: 8.0, c51: None, c52: Some(1.01), c53: None, c54: Some(0.01546875) },
    CalibrationRow { p: 10.0, c51: None, c52: Some(1.01), c53: None, c54: Some(0.0038671875) },
];
