use grasstensor::analysis::{cp_rank_bounds, AlsOptions};
use grasstensor::fixtures::{lines_in_p4, CenterLayout};
use grasstensor::grassmann::build_tensor;
use grasstensor::multiview::Profile;

fn main() {
    let alphas = vec![1, 2, 2];
    for layout in CenterLayout::ALL {
        for pair in [[0, 1], [1, 2]] {
            for seed in 0..5 {
                let cams = lines_in_p4(layout, pair, seed).unwrap();
                let t = build_tensor(&cams, &Profile::new(alphas.clone(), 4, &[2, 2, 2]).unwrap()).unwrap();
                let b = cp_rank_bounds(t.entries(), 6, &AlsOptions::default()).unwrap();
                println!("{:>24} pair {:?} seed {} lower {} upper {:?} {:?}", layout.name(), pair, seed, b.lower, b.upper, b.residuals);
            }
        }
    }
}
