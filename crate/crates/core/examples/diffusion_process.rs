//! Forward noising of a placement graph and the reverse-step posterior of
//! the two-state diffusion.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sensorplace::diffusion::{forward_sample, DiffusionSchedule, GraphState, ScheduleKind};
use sensorplace::placement::PlacementGraph;

fn main() -> sensorplace::Result<()> {
    let sched = DiffusionSchedule::new(20, ScheduleKind::Cosine)?;
    println!(" t   alpha   Q̄[1][1]");
    for t in [1, 5, 10, 15, 20] {
        println!("{t:2}  {:.4}  {:.4}", sched.alpha(t), sched.q_bar(t)[1][1]);
    }

    let mut g = PlacementGraph::empty(6);
    for v in [0, 2, 3] {
        g.select(v, true);
    }
    g.set_link(0, 2, true);
    g.set_link(2, 3, true);
    let g0 = GraphState::from_placement(&g, 0);
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let bits = |s: &GraphState| s.nodes.iter().chain(&s.edges).map(|b| b.to_string()).collect::<String>();
    println!("\nG^0   {}", bits(&g0));
    for t in [2, 6, 12, 20] {
        println!("G^{t:<2}  {}", bits(&forward_sample(&g0, &sched, t, &mut rng)?));
    }

    println!("\nq(z^(t-1) = 1 | z^t = 0, z^0 = 1):");
    for t in [2, 10, 19] {
        println!("  t={t:2}: {:.4}", sched.posterior(0, 1, t)?[1]);
    }
    Ok(())
}
