//! Seeded small instances for exhaustive comparisons: at most four nodes,
//! four functions and three function kinds, with some background load
//! already queued. Buffers hold at most two functions of a request, so no
//! node ever needs more than two positions.

use nfms_core::schedule::schedule_assignment;
use nfms_core::{
    FunctionKind, FunctionSpec, NetworkState, NodeId, NodeState, ServiceId, ServiceRequest,
};
use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const KINDS: u16 = 3;

fn function(rng: &mut ChaCha8Rng) -> FunctionSpec {
    FunctionSpec {
        kind: FunctionKind(rng.random_range(1..=KINDS)),
        buffer_demand: rng.random_range(13..=20),
    }
}

/// A network of 1 to 4 nodes after 0 to 3 background services have been
/// committed, and a request of 1 to 4 functions arriving at the current
/// time. Deadlines range from tight to loose.
pub fn small_instance(seed: u64) -> (NetworkState, ServiceRequest) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rng.random_range(1..=4);
    let nodes = (0..n)
        .map(|j| {
            let count = rng.random_range(1..=KINDS as usize);
            let mut kinds = sample(&mut rng, KINDS as usize, count).into_vec();
            kinds.sort_unstable();
            let times = kinds
                .into_iter()
                .map(|k| (FunctionKind(k as u16 + 1), rng.random_range(1..=10)))
                .collect();
            NodeState::new(NodeId(j as u32), times, rng.random_range(20..=38)).expect("valid node")
        })
        .collect();
    let mut net = NetworkState::new(nodes).expect("distinct ids");

    let background = rng.random_range(0..=3);
    for id in 0..background {
        let len = rng.random_range(1..=2);
        let functions: Vec<FunctionSpec> = (0..len).map(|_| function(&mut rng)).collect();
        let req = ServiceRequest::new(ServiceId(1000 + id), functions, net.now(), net.now() + 1000)
            .expect("valid request");
        let assignment: Vec<usize> = (0..len).map(|_| rng.random_range(0..n)).collect();
        if let Ok(sol) = schedule_assignment(&net, &req, &assignment) {
            net.commit(&req, &sol)
                .expect("scheduled assignment commits");
        }
    }
    let now = net.now() + rng.random_range(0..=5);
    net.advance_to(now).expect("clock moves forward");

    let m = rng.random_range(1..=4);
    let functions: Vec<FunctionSpec> = (0..m).map(|_| function(&mut rng)).collect();
    let deadline = now + rng.random_range(5..=60);
    let req =
        ServiceRequest::new(ServiceId(seed), functions, now, deadline).expect("valid request");
    (net, req)
}
