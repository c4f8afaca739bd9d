use cwl_core::coset::SubgroupOracle;
use cwl_core::group::{BallCache, Elem, GroupModel};
use cwl_core::growth::covering_check;

#[test]
fn probe() {
    let f2 = GroupModel::free(2).unwrap();
    let oracle = SubgroupOracle::free_group_gens(f2.clone(), &["a"]).unwrap();
    let x = Elem::Word(vec![1]);
    let mut cache = BallCache::ephemeral();
    let check = covering_check(&oracle, &x, 1, &mut cache).unwrap();
    println!("fresh cache: ok={} reps={}", check.ok, check.reps);

    let mut cache2 = BallCache::ephemeral();
    for r in [1u32, 2, 3] {
        for xx in [f2.id(), Elem::Word(vec![2]), Elem::Word(vec![1, 2]), Elem::Word(vec![2, 2])] {
            let _ = covering_check(&oracle, &xx, r, &mut cache2).unwrap();
        }
    }
    let check2 = covering_check(&oracle, &x, 1, &mut cache2).unwrap();
    println!("warm cache: ok={} reps={}", check2.ok, check2.reps);
}
