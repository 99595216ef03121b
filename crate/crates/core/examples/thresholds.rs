//! Prints the EXIT thresholds of the reference codes and their gaps to capacity.

use std::time::Instant;

use pli_core::capacity::capacity_ebn0_db;
use pli_core::codes;
use pli_core::exit::{find_threshold, AnalysisKind, ThresholdSearch};

fn main() -> pli_core::Result<()> {
    let cap = capacity_ebn0_db(0.5)?;
    println!("capacity (R = 1/2): {cap:.4} dB");
    let search = ThresholdSearch::default();
    for (name, pli) in [
        ("AR4JA", codes::ar4ja()),
        ("C1", codes::c1()),
        ("C2", codes::c2()),
    ] {
        let t = Instant::now();
        let kind = AnalysisKind::for_protograph(&pli);
        let r = find_threshold(kind, &pli, &search)?;
        println!(
            "{name:6} {kind:?}: threshold {:.4} dB, gap {:.4} dB, {} runs, {:.2?}",
            r.threshold_db,
            r.threshold_db - cap,
            r.evaluations,
            t.elapsed()
        );
    }
    Ok(())
}
