use etdbc::cr3bp::SystemParams;
use etdbc::propagation::Cr3bpModel;
use etdbc::search::{search_planar, SearchParams};

fn main() {
    let p = SystemParams::<f64>::earth_moon();
    let m = Cr3bpModel::new(p);
    let mut sp = SearchParams::desk_scale(&p);
    sp.h *= 2.0;
    sp.d_o *= 2.0;
    sp.tau_s = 2.0 * std::f64::consts::TAU;
    sp.tau_sp = std::f64::consts::TAU;
    sp.tau_b = std::f64::consts::TAU;
    let t0 = std::time::Instant::now();
    let comps = search_planar(&m, &p, &sp, (0.52, 0.52)).unwrap();
    let c = &comps[0];
    println!(
        "tiny: records={} growth_passes={} boundary_cand={} hits={} grid_cand={} elapsed={:.2?}",
        c.stats.records, c.stats.growth_passes, c.stats.boundary_candidates,
        c.stats.boundary_hits, c.stats.grid_candidates, t0.elapsed()
    );
    // desk-scale proper
    let sp = SearchParams::desk_scale(&p);
    let t0 = std::time::Instant::now();
    let comps = search_planar(&m, &p, &sp, (0.52, 0.52)).unwrap();
    let c = &comps[0];
    println!(
        "desk: records={} growth_passes={} boundary_cand={} hits={} grid_cand={} elapsed={:.2?}",
        c.stats.records, c.stats.growth_passes, c.stats.boundary_candidates,
        c.stats.boundary_hits, c.stats.grid_candidates, t0.elapsed()
    );
}
