use neon_core::semgraph::{probe_inputs, value_fingerprint, Fingerprint, PROBE_ROWS};

/// Fingerprint of a single value.
fn cell(v: f64) -> Fingerprint {
    value_fingerprint(&[v], &[])
}

#[test]
fn quantization_cells() {
    assert_eq!(cell(0.0), cell(-0.0));
    assert_eq!(cell(1e-12), cell(0.0));
    assert_ne!(cell(1e-3), cell(0.0));
    // straddling a power of two by one ulp
    assert_eq!(cell(4.0), cell(f64::from_bits(4.0f64.to_bits() - 1)));
    assert_eq!(cell(1.0), cell(f64::from_bits(1.0f64.to_bits() - 1)));
    assert_eq!(cell(1e6), cell(1e6 * (1.0 + 1e-12)));
    assert_ne!(cell(1e6), cell(1e6 * (1.0 + 1e-8)));
    assert_ne!(cell(2.5), cell(-2.5));
    let sentinels = [cell(f64::NAN), cell(f64::INFINITY), cell(f64::NEG_INFINITY)];
    assert_ne!(sentinels[0], sentinels[1]);
    assert_ne!(sentinels[1], sentinels[2]);
    assert_ne!(sentinels[0], cell(0.0));
}

#[test]
fn probes_are_fixed_per_column() {
    let a = probe_inputs(2);
    let b = probe_inputs(5);
    assert_eq!(a.rows(), PROBE_ROWS);
    assert_eq!(a.column(1), b.column(1));
    assert_ne!(b.column(0), b.column(1));
}
