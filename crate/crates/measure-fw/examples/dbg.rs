use measure_fw::instances::presets::pmeans_single;
use measure_fw::{AtomicMeasure, RngStream};

fn main() {
    let inst = pmeans_single();
    let mu0 = AtomicMeasure::center_dirac(inst.domain());
    let exact = inst.objective(&mu0).unwrap();
    println!("exact J(delta_0.5) = {exact:.17}");
    for r in 0..4u64 {
        let jm = inst.mc_objective(&mu0, 500, RngStream::aux(7, 600, r)).unwrap();
        println!("rep {r}: J_500 = {jm:.17} diff {:.3e}", jm - exact);
    }
    let ys = inst.draws(5, RngStream::aux(7, 600, 0)).unwrap();
    for y in ys {
        println!("y={y:.6} F={:.17}", inst.sample_objective(&mu0, y).unwrap());
    }
}
