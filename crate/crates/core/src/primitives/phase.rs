use super::layout::{footprint, Builder, Pos};
use super::surgery::{joint_checks, surgery_layout};
use super::{Parity, PhaseGateSpec, PrimitiveSpec, SpecError};
use crate::circuit::{Circuit, Gate, Pauli};
use crate::Basis;

/// Y-type logical on a square block: X along column `col`, Z along row `row`,
/// Y where they cross.
fn y_logical(col: i32, row: i32, cols: std::ops::Range<i32>, rows: std::ops::Range<i32>) -> Vec<(Pauli, Pos)> {
    let mut out = vec![(Pauli::Y, (col, row))];
    out.extend(rows.filter(|&r| r != row).map(|r| (Pauli::X, (col, r))));
    out.extend(cols.filter(|&c| c != col).map(|c| (Pauli::Z, (c, row))));
    out
}

/// Lattice-surgery S gate: data patch D and ancilla patch A both start in |+>,
/// a Z⊗Z merge runs for `t_merge` rounds, D is read out in Y by a noiseless
/// product measurement and A is measured in Y after `t_boundary` extra rounds.
/// The single observable is the parity of merge outcome, bridge X outcomes
/// along the readout column and both Y outcomes.
pub fn gen_phase_gate(spec: &PhaseGateSpec) -> Result<Circuit, SpecError> {
    PrimitiveSpec::PhaseGate(*spec).validate()?;
    let d = spec.d;
    let lay = surgery_layout((0, 0), d, d, spec.bridge_length, Parity::ZZ);
    let (dp, ap) = (lay.p1, lay.p2);
    let d_set = dp.plaquettes();
    let a_set = ap.plaquettes();
    let mut split = d_set.clone();
    split.extend(a_set.iter().cloned());
    let merged = lay.merged.plaquettes();
    let (data, anc) = footprint(&[dp, lay.bridge, ap], &[&split, &merged]);
    let mut b = Builder::new(&data, &anc, 1);
    let bridge = lay.bridge.data();
    let joint = joint_checks(&merged, &lay, Basis::Z);

    for k in 0..spec.t_merge {
        if k > 0 {
            b.tick();
        }
        b.begin_round(&merged);
        if k == 0 {
            b.reset_data(&lay.merged.data(), Basis::X);
        }
        b.activate(&merged);
        b.tick();
        b.cx_layers(&merged);
        b.measure_ancillas(&merged);
        if k == 0 {
            let recs: Vec<usize> = joint.iter().flat_map(|p| b.last_record(*p).expect("just measured")).collect();
            b.observable_add(0, &recs);
        }
    }
    let recs = b.measure_data(&bridge, Basis::X);
    let col0: Vec<usize> = bridge.iter().zip(&recs).filter(|(p, _)| p.0 == 0).map(|(_, &m)| m).collect();
    b.observable_add(0, &col0);

    // transition round: D leaves through a noiseless readout while A keeps running
    let d_rows = dp.row0..dp.row0 + dp.height;
    let cols = 0..d as i32;
    let y_d = y_logical(0, dp.row0 + dp.height - 1, cols.clone(), d_rows);
    b.tick();
    b.begin_round(&a_set);
    b.activate(&split);
    let yd = b.mpp_close(&dp, &[y_d]);
    b.observable_add(0, &yd);
    b.tick();
    b.cx_layers(&a_set);
    b.measure_ancillas(&a_set);

    for _ in 0..spec.t_boundary {
        b.tick();
        b.begin_round(&a_set);
        b.activate(&a_set);
        b.tick();
        b.cx_layers(&a_set);
        b.measure_ancillas(&a_set);
    }

    let ra = ap.row0;
    let corner = (0, ra);
    b.gate1(Gate::S, &[corner]);
    b.tick();
    let row: Vec<Pos> = ap.row(ra).into_iter().filter(|&p| p != corner).collect();
    let rest: Vec<Pos> = ap.data().into_iter().filter(|p| p.1 != ra).collect();
    let yc = b.measure_data(&[corner], Basis::X);
    b.forget(&[corner]);
    let zr = b.measure_data(&row, Basis::Z);
    let xr = b.measure_data(&rest, Basis::X);
    b.observable_add(0, &yc);
    b.observable_add(0, &zr);
    let col_recs: Vec<usize> = rest.iter().zip(&xr).filter(|(p, _)| p.0 == 0).map(|(_, &m)| m).collect();
    b.observable_add(0, &col_recs);
    b.close_with_data();
    Ok(b.finish())
}
