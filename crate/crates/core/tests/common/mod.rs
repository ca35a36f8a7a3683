//! Fixtures shared by the integration tests and the acceptance suite.
#![allow(dead_code)]

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use swapstable::exact::int;
use swapstable::metric::Role;
use swapstable::{Instance, InstanceBuilder, Metric, Objective, Point, Rational, Surd};

pub fn pt(role: Role, id: usize, xs: &[i64]) -> Point {
    let coords: Vec<Rational> = xs.iter().map(|&x| int(x)).collect();
    Point::at(role, id, &coords)
}

/// Points and candidate centres at 0, 1, 4 and 5 on a line. Ids equal the
/// coordinates, so solutions read as positions.
pub fn line_instance(objective: Objective, k: usize) -> Instance {
    let mut b = InstanceBuilder::new(objective, Metric::Euclidean, k);
    for x in [0, 1, 4, 5] {
        b.points.push(pt(Role::Data, x as usize, &[x]));
        b.centres.push(pt(Role::Centre, x as usize, &[x]));
    }
    b.build().unwrap()
}

/// Data at 0 (id 0) and 10 (id 1), one centre at 0, penalties 5 and 3.
pub fn penalty_pair() -> Instance {
    let mut b = InstanceBuilder::new(Objective::KMedian, Metric::Euclidean, 1);
    b.points.push(pt(Role::Data, 0, &[0]));
    b.points.push(pt(Role::Data, 1, &[10]));
    b.centres.push(pt(Role::Centre, 0, &[0]));
    b.penalties = Some(BTreeMap::from([(0, Surd::from_int(5)), (1, Surd::from_int(3))]));
    b.build().unwrap()
}

/// Data and centres at 0 and 1 on a line with k = 1: two tied optima.
pub fn two_optima() -> Instance {
    let mut b = InstanceBuilder::new(Objective::KMedian, Metric::Euclidean, 1);
    for x in [0, 1] {
        b.points.push(pt(Role::Data, x as usize, &[x]));
        b.centres.push(pt(Role::Centre, x as usize, &[x]));
    }
    b.build().unwrap()
}

#[derive(Clone, Copy, Debug)]
pub struct RandomSpec {
    pub points: usize,
    pub centres: usize,
    pub k: usize,
    pub dim: usize,
    pub range: i64,
    pub objective: Objective,
    pub penalties: bool,
}

/// Integer coordinates in `[0, range]`; penalties, when asked for, are
/// integers in `[1, range^power]` so that some bind and some do not.
pub fn random_instance(seed: u64, spec: RandomSpec) -> Instance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut b = InstanceBuilder::new(spec.objective, Metric::Euclidean, spec.k);
    let draw = |rng: &mut ChaCha8Rng| (0..spec.dim).map(|_| rng.gen_range(0..=spec.range)).collect::<Vec<_>>();
    for id in 0..spec.points {
        let xs = draw(&mut rng);
        b.points.push(pt(Role::Data, id, &xs));
    }
    for id in 0..spec.centres {
        let xs = draw(&mut rng);
        b.centres.push(pt(Role::Centre, id, &xs));
    }
    if spec.penalties {
        let cap = spec.range.pow(spec.objective.power()).max(1);
        b.penalties = Some((0..spec.points).map(|id| (id, Surd::from_int(rng.gen_range(1..=cap)))).collect());
    }
    b.build().unwrap()
}

/// Tight clusters of integer points far apart in the plane, one or two
/// candidate centres near each cluster and an occasional decoy centre.
/// Penalty variants add a far outlier that prefers paying its penalty.
pub fn blob_instance(seed: u64) -> Instance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let k = rng.gen_range(2..=4usize);
    let objective = if seed % 2 == 0 { Objective::KMeans } else { Objective::KMedian };
    let with_penalties = seed % 3 == 0;
    let mut b = InstanceBuilder::new(objective, Metric::Euclidean, k);
    let mut next_point = 0;
    let mut next_centre = 0;
    for blob in 0..k as i64 {
        let (cx, cy) = (100 * blob, 60 * (blob % 2) + rng.gen_range(-10..=10));
        for _ in 0..rng.gen_range(3..=8) {
            let xs = [cx + rng.gen_range(-3..=3), cy + rng.gen_range(-3..=3)];
            let mult = if rng.gen_bool(0.2) { 2 } else { 1 };
            b.points.push(pt(Role::Data, next_point, &xs).with_multiplicity(mult));
            next_point += 1;
        }
        for _ in 0..rng.gen_range(1..=2) {
            let xs = [cx + rng.gen_range(-2..=2), cy + rng.gen_range(-2..=2)];
            b.centres.push(pt(Role::Centre, next_centre, &xs));
            next_centre += 1;
        }
    }
    if next_centre < 12 && rng.gen_bool(0.5) {
        let xs = [50 + rng.gen_range(-5..=5), 200 + rng.gen_range(-5..=5)];
        b.centres.push(pt(Role::Centre, next_centre, &xs));
    }
    if with_penalties {
        b.points.push(pt(Role::Data, next_point, &[150, -300]));
        let unit: i64 = if objective == Objective::KMeans { 400 } else { 20 };
        b.penalties = Some((0..=next_point).map(|id| (id, Surd::from_int(unit))).collect());
    }
    b.build().unwrap()
}

/// The analysis parameter `eps` that goes with stability `1 + eps_prime`:
/// `1 + 6 eps = (1 + eps_prime)^2`.
pub fn eps_for(eps_prime: &Rational) -> Rational {
    let a = Rational::from_integer(1.into()) + eps_prime;
    (&a * &a - int(1)) / int(6)
}
