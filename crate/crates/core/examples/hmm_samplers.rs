//! The three twin samplers on one parent and one transmitted haplotype.
//!
//! Run with `cargo run --example hmm_samplers`.

use digital_twins::hmm::{
    compute_fb_weights, sample_ancestry_posterior, sample_global_twin, sample_local_twin,
    sample_modified_local_twin, GeneticMap, HaplotypePair, HmmParams, Interval, Strand,
};
use digital_twins::rng::{Domain, Streams};

fn show(x: &[u8]) -> String {
    x.iter().map(|a| char::from(b'0' + a)).collect()
}

fn main() -> digital_twins::Result<()> {
    let map = GeneticMap::uniform(&[(1, 12, 0.6, 12_000_000)])?;
    let params = HmmParams::default();
    let parent = HaplotypePair::new(vec![0; 12], vec![1; 12])?;
    let observed = vec![0, 0, 0, 0, 0, 1, 1, 1, 1, 1, 1, 1];
    let streams = Streams::new(7);

    let fb = compute_fb_weights(&observed, &parent, &map, &params)?;
    let post: Vec<String> = (0..12)
        .map(|j| format!("{:.2}", fb.posterior(j)[0]))
        .collect();
    println!("observed          {}", show(&observed));
    println!("P(copy strand a)  {}", post.join(" "));
    let u = sample_ancestry_posterior(
        &observed,
        &parent,
        &map,
        &params,
        &mut streams.stream(Domain::Posterior, [0; 4]),
    )?;
    println!(
        "posterior states  {}",
        u.states
            .iter()
            .map(|s| if *s == Strand::A { 'a' } else { 'b' })
            .collect::<String>()
    );

    let mut rng = streams.stream(Domain::GlobalTwin, [0; 4]);
    for _ in 0..3 {
        println!(
            "global twin       {}",
            show(&sample_global_twin(&parent, &map, &params, &mut rng)?.0)
        );
    }
    let group = Interval::new(3, 8)?;
    let mut rng = streams.stream(Domain::LocalTwin, [0; 4]);
    for _ in 0..3 {
        let seg = sample_local_twin(&observed, &parent, &map, &params, group, &mut rng)?;
        let mut x = observed.clone();
        x[group.first..=group.last].copy_from_slice(&seg);
        println!("local twin 4..9   {}", show(&x));
    }
    let mut rng = streams.stream(Domain::ModifiedTwin, [0; 4]);
    for _ in 0..3 {
        let (seg, _) = sample_modified_local_twin(
            (Strand::A, Strand::B),
            &parent,
            &map,
            &params,
            group,
            &mut rng,
        )?;
        let mut x = observed.clone();
        x[group.first..=group.last].copy_from_slice(&seg);
        println!("modified twin     {}", show(&x));
    }
    Ok(())
}
