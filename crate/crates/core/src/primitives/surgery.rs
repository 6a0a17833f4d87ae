use super::layout::{footprint, Builder, Plaquette, Pos, Region};
use super::memory::records_of;
use super::{LatticeSurgerySpec, Parity, PrimitiveSpec, SpecError};
use crate::circuit::Circuit;

/// Patches, bridge and merged block. `M_ZZ` stacks the patches vertically so
/// the seam runs along their Z logicals; `M_XX` places them side by side.
pub(crate) struct SurgeryLayout {
    pub p1: Region,
    pub bridge: Region,
    pub p2: Region,
    pub merged: Region,
    /// Logical supports adjacent to the seam.
    pub seam1: Vec<Pos>,
    pub seam2: Vec<Pos>,
}

pub(crate) fn surgery_layout(origin: Pos, w: usize, h: usize, l: usize, parity: Parity) -> SurgeryLayout {
    let (ox, oy) = origin;
    let (wi, hi, li) = (w as i32, h as i32, l as i32);
    match parity {
        Parity::ZZ => {
            let p1 = Region::new(ox, oy, w, h);
            let p2 = Region::new(ox, oy + hi + li, w, h);
            SurgeryLayout {
                p1,
                bridge: Region::new(ox, oy + hi, w, l),
                p2,
                merged: Region::new(ox, oy, w, 2 * h + l),
                seam1: p1.row(oy + hi - 1),
                seam2: p2.row(oy + hi + li),
            }
        }
        Parity::XX => {
            let p1 = Region::new(ox, oy, w, h);
            let p2 = Region::new(ox + wi + li, oy, w, h);
            SurgeryLayout {
                p1,
                bridge: Region::new(ox + wi, oy, l, h),
                p2,
                merged: Region::new(ox, oy, 2 * w + l, h),
                seam1: p1.column(ox + wi - 1),
                seam2: p2.column(ox + wi + li),
            }
        }
    }
}

/// Checks of `set`, of the given type, whose product is the joint seam logical.
pub(crate) fn joint_checks(set: &[Plaquette], lay: &SurgeryLayout, basis: crate::Basis) -> Vec<Pos> {
    let support: Vec<Pos> = lay.seam1.iter().chain(&lay.seam2).copied().collect();
    Builder::product_of_checks(set, basis, &support).expect("joint logical is a product of merged checks")
}

/// Observables: 0 is the joint parity, 1 and 2 the individual patch logicals.
pub fn gen_lattice_surgery(spec: &LatticeSurgerySpec) -> Result<Circuit, SpecError> {
    PrimitiveSpec::LatticeSurgery(*spec).validate()?;
    let g = spec.geometry;
    let basis = spec.parity.basis();
    let lay = surgery_layout(g.origin, g.d_z, g.d_x, spec.bridge_length, spec.parity);
    let mut split = lay.p1.plaquettes();
    split.extend(lay.p2.plaquettes());
    let merged = lay.merged.plaquettes();
    let (data, anc) = footprint(&[lay.p1, lay.bridge, lay.p2], &[&split, &merged]);
    let mut b = Builder::new(&data, &anc, 3);
    let patches: Vec<Pos> = lay.p1.data().into_iter().chain(lay.p2.data()).collect();
    let bridge = lay.bridge.data();
    let joint = joint_checks(&merged, &lay, basis);

    let m0 = spec.t_pre;
    let m1 = spec.t_pre + spec.t_merge;
    let total = m1 + spec.t_post;
    for k in 0..total {
        let set = if (m0..m1).contains(&k) { &merged } else { &split };
        if k > 0 {
            b.tick();
        }
        b.begin_round(set);
        if k == 0 {
            b.reset_data(&patches, basis);
        }
        if k == m0 {
            b.reset_data(&bridge, basis.other());
        }
        b.activate(set);
        b.tick();
        b.cx_layers(set);
        b.measure_ancillas(set);
        if k == m0 {
            let recs: Vec<usize> = joint.iter().flat_map(|p| b.last_record(*p).expect("just measured")).collect();
            b.observable_add(0, &recs);
        }
        if k + 1 == m1 {
            b.measure_data(&bridge, basis.other());
        }
    }
    let recs = b.measure_data(&patches, basis);
    b.close_with_data();
    b.observable_add(1, &records_of(&patches, &recs, &lay.seam1));
    b.observable_add(2, &records_of(&patches, &recs, &lay.seam2));
    Ok(b.finish())
}
