//! Load interactions, split them per user and assign popularity tiers.
//!
//! cargo run --example ingest_and_group [ratings-file]

use ilerec::experiment::{synth_dataset, SynthConfig};
use ilerec::ingest::{
    assign_popularity_groups, load_interactions, profile_distribution, split_train_test, DatasetFormat, Delimiter,
};
use ilerec::Group;

fn main() -> ilerec::Result<()> {
    let ds = match std::env::args().nth(1) {
        Some(path) => load_interactions(path, DatasetFormat::Triples, Delimiter::Auto)?,
        None => synth_dataset(&SynthConfig::default())?,
    };
    println!(
        "{} users, {} items, {} interactions",
        ds.n_users(),
        ds.n_items(),
        ds.len()
    );

    let split = split_train_test(&ds, 0.8, 42)?;
    println!("train {} / test {}", split.train.len(), split.test.len());

    let grouping = assign_popularity_groups(&split.train);
    for g in Group::ALL {
        let members: Vec<usize> = (0..grouping.n_items()).filter(|&i| grouping.group_of(i) == g).collect();
        let interactions: u64 = members.iter().map(|&i| grouping.count(i)).sum();
        println!(
            "{}: {:>4} items, {:>5.1}% of training interactions",
            g.as_str(),
            members.len(),
            100.0 * interactions as f64 / split.train.len() as f64
        );
    }

    for user in 0..3.min(split.train.n_users()) {
        let p = profile_distribution(user, &split.train, &grouping)?;
        println!(
            "user {}: H {:.2} M {:.2} T {:.2}",
            split.train.user_ids().id(user),
            p.head,
            p.mid,
            p.tail
        );
    }
    Ok(())
}
