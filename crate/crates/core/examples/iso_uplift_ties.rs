//! A model that scores two groups identically leaves the curve inside the
//! tie dependent on record order. Interpolating each tied block by its chord
//! removes that dependence; this example shuffles the input and shows the
//! raw area moving while the interpolated one stays put.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use uplift_eval::curves::{curve_v1, interpolate_iso_uplift};
use uplift_eval::data::LoggedBanditDataset;
use uplift_eval::generators::{generate, toy2};
use uplift_eval::{auuc, rank_by_score};

fn main() -> uplift_eval::Result<()> {
    let scenario = toy2();
    let model = scenario.model("u").expect("true-uplift model");
    let data = generate(&scenario.population.clone().with_n(2_000).with_seed(4))?;
    let scores = data.scores_for(&model.group_scores)?;
    let mut rng = ChaCha8Rng::seed_from_u64(0);

    for round in 0..4 {
        let mut idx: Vec<usize> = (0..scores.len()).collect();
        idx.shuffle(&mut rng);
        let logged = LoggedBanditDataset::new(idx.iter().map(|&i| data.logged.records()[i].clone()).collect())?;
        let s: Vec<f64> = idx.iter().map(|&i| scores[i]).collect();
        let scored = rank_by_score(&logged, &s)?;
        let raw = curve_v1(&scored)?;
        let smooth = interpolate_iso_uplift(&raw, &scored)?;
        println!("shuffle {round}: raw {:.6}   interpolated {:.6}", auuc(&raw), auuc(&smooth));
    }
    Ok(())
}
