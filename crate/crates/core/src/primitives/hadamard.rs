use super::layout::{footprint, Builder, Plaquette, Region};
use super::memory::{logical, records_of};
use super::{HadamardSpec, PrimitiveSpec, SpecError};
use crate::circuit::Circuit;

pub fn gen_hadamard(spec: &HadamardSpec) -> Result<Circuit, SpecError> {
    PrimitiveSpec::Hadamard(*spec).validate()?;
    let g = spec.geometry;
    let reg = Region::new(g.origin.0, g.origin.1, g.d_z, g.d_x);
    let pre = reg.plaquettes();
    let post: Vec<Plaquette> = pre.iter().map(|p| Plaquette { basis: p.basis.other(), ..p.clone() }).collect();
    let (data, anc) = footprint(&[reg], &[&pre]);
    let mut b = Builder::new(&data, &anc, 1);
    b.set_side_flip(true);
    let qubits = reg.data();
    let total = spec.t_pre + spec.t_post;
    for k in 0..total {
        let set = if k < spec.t_pre { &pre } else { &post };
        if k > 0 {
            b.tick();
        }
        b.begin_round(set);
        if k == 0 {
            b.reset_data(&qubits, spec.basis);
        }
        b.activate(set);
        b.tick();
        b.cx_layers(set);
        b.measure_ancillas(set);
        if k + 1 == spec.t_pre {
            b.transversal_h(&qubits);
        }
    }
    let out = spec.basis.other();
    let recs = b.measure_data(&qubits, out);
    b.close_with_data();
    // the prepared logical keeps its support and changes type
    b.observable_add(0, &records_of(&qubits, &recs, &logical(&reg, spec.basis)));
    Ok(b.finish())
}
