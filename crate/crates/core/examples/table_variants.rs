//! Evaluates the six tabulated Qini / uplift variants on one dataset.

use uplift_eval::curves::{table1_curve, Ranking, Table1Grid, Table1Variant};
use uplift_eval::generators::{generate, toy3_spec};
use uplift_eval::{auuc, rank_by_score};

fn main() -> uplift_eval::Result<()> {
    let spec = toy3_spec().with_n(10_000).with_seed(5);
    let data = generate(&spec)?;
    let scored = rank_by_score(&data.logged, &data.scores)?;

    for variant in Table1Variant::ALL {
        let grid = match variant.ranking() {
            Ranking::Joint => Table1Grid::Ranks,
            Ranking::Separate => Table1Grid::uniform(100),
        };
        let gapped = table1_curve(&scored, variant, &grid)?;
        let missing = gapped.values.iter().filter(|v| v.is_none()).count();
        let curve = gapped.bridged()?;
        println!(
            "{:<18} end {:>10.4}   area {:>12.4}   undefined points {missing}",
            variant.to_string(),
            curve.endpoint(),
            auuc(&curve)
        );
    }
    Ok(())
}
