use super::layout::{footprint, Builder, Region};
use super::{MemorySpec, PrimitiveSpec, SpecError};
use crate::circuit::Circuit;
use crate::Basis;

/// Logical-operator support of `basis` on a patch: a row for Z, a column for X.
pub(crate) fn logical(reg: &Region, basis: Basis) -> Vec<(i32, i32)> {
    match basis {
        Basis::Z => reg.row(reg.row0),
        Basis::X => reg.column(reg.col0),
    }
}

pub(crate) fn records_of(qubits: &[(i32, i32)], recs: &[usize], support: &[(i32, i32)]) -> Vec<usize> {
    support.iter().map(|p| recs[qubits.iter().position(|q| q == p).expect("support is measured")]).collect()
}

pub fn gen_memory(spec: &MemorySpec) -> Result<Circuit, SpecError> {
    PrimitiveSpec::Memory(*spec).validate()?;
    let g = spec.geometry;
    let reg = Region::new(g.origin.0, g.origin.1, g.d_z, g.d_x);
    let set = reg.plaquettes();
    let (data, anc) = footprint(&[reg], &[&set]);
    let mut b = Builder::new(&data, &anc, 1);
    let qubits = reg.data();
    for k in 0..spec.rounds {
        if k > 0 {
            b.tick();
        }
        b.begin_round(&set);
        if k == 0 {
            b.reset_data(&qubits, spec.basis);
        }
        b.activate(&set);
        b.tick();
        b.cx_layers(&set);
        b.measure_ancillas(&set);
    }
    let recs = b.measure_data(&qubits, spec.basis);
    b.close_with_data();
    b.observable_add(0, &records_of(&qubits, &recs, &logical(&reg, spec.basis)));
    Ok(b.finish())
}
