use crate::placement::PlacementGraph;

#[derive(Debug, Clone, PartialEq)]
pub struct BufferEntry {
    pub graph: PlacementGraph,
    pub reward: f64,
    order: u64,
}

/// The best terminal graphs seen so far, sorted by descending reward, ties
/// in insertion order, without duplicates.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperienceBuffer {
    capacity: usize,
    entries: Vec<BufferEntry>,
    inserted: u64,
}

impl ExperienceBuffer {
    pub fn new(capacity: usize) -> Self {
        Self {
            capacity,
            entries: Vec::with_capacity(capacity + 1),
            inserted: 0,
        }
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn is_full(&self) -> bool {
        self.entries.len() == self.capacity
    }

    pub fn entries(&self) -> &[BufferEntry] {
        &self.entries
    }

    pub fn min_reward(&self) -> Option<f64> {
        self.entries.last().map(|e| e.reward)
    }

    /// Merges `(graph, reward)` pairs, keeping the higher reward for a
    /// repeated graph and then the top `capacity` entries.
    pub fn update<'a>(&mut self, items: impl IntoIterator<Item = (&'a PlacementGraph, f64)>) {
        for (graph, reward) in items {
            if let Some(e) = self.entries.iter_mut().find(|e| &e.graph == graph) {
                if reward > e.reward {
                    e.reward = reward;
                }
                continue;
            }
            self.entries.push(BufferEntry {
                graph: graph.clone(),
                reward,
                order: self.inserted,
            });
            self.inserted += 1;
        }
        self.entries
            .sort_by(|a, b| b.reward.total_cmp(&a.reward).then(a.order.cmp(&b.order)));
        self.entries.truncate(self.capacity);
    }

    /// The entry nearest to `terminal` in mean squared bit difference; ties
    /// go to the higher reward, then the earlier insertion.
    pub fn select_feedback(&self, terminal: &PlacementGraph) -> Option<&PlacementGraph> {
        let mut best: Option<(&BufferEntry, f64)> = None;
        for e in &self.entries {
            let d = e.graph.mse(terminal);
            if best.is_none_or(|(_, bd)| d < bd) {
                best = Some((e, d));
            }
        }
        best.map(|(e, _)| &e.graph)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn g(bits: u32) -> PlacementGraph {
        let mut p = PlacementGraph::empty(3);
        for i in 0..3 {
            p.select(i, bits >> i & 1 == 1);
        }
        for (k, (i, j)) in crate::pairs::pairs(3).enumerate() {
            p.set_link(i, j, bits >> (3 + k) & 1 == 1);
        }
        p
    }

    #[test]
    fn keeps_top_rewards() {
        let mut b = ExperienceBuffer::new(2);
        b.update([(&g(1), 5.0), (&g(2), 3.0)]);
        b.update([(&g(3), 4.0)]);
        let r: Vec<f64> = b.entries().iter().map(|e| e.reward).collect();
        assert_eq!(r, vec![5.0, 4.0]);
    }

    #[test]
    fn duplicate_with_lower_reward_is_ignored() {
        let mut b = ExperienceBuffer::new(3);
        b.update([(&g(1), 5.0), (&g(2), 3.0)]);
        let before = b.clone();
        b.update([(&g(2), 1.0)]);
        assert_eq!(b, before);
    }

    #[test]
    fn overflow_keeps_the_best() {
        let mut b = ExperienceBuffer::new(4);
        let rewards = [3.0, 9.0, -1.0, 7.0, 0.5, 8.0, 2.0, 6.0, 4.0];
        let graphs: Vec<PlacementGraph> = (0..rewards.len() as u32).map(g).collect();
        b.update(graphs.iter().zip(rewards));
        let mut sorted = rewards.to_vec();
        sorted.sort_by(|a, b| b.total_cmp(a));
        let kept: Vec<f64> = b.entries().iter().map(|e| e.reward).collect();
        assert_eq!(kept, sorted[..4]);
        assert!(b.is_full());
        assert_eq!(b.min_reward(), Some(6.0));
    }

    #[test]
    fn feedback_is_nearest() {
        let mut b = ExperienceBuffer::new(4);
        assert!(b.select_feedback(&g(0)).is_none());
        // one bit away vs three bits away
        b.update([(&g(0b000_0111), 1.0), (&g(0b000_0001), 0.5)]);
        assert_eq!(b.select_feedback(&g(0b000_0000)), Some(&g(0b000_0001)));
        assert_eq!(b.select_feedback(&g(0b000_0111)), Some(&g(0b000_0111)));
    }

    #[test]
    fn feedback_ties_prefer_reward_then_age() {
        let mut b = ExperienceBuffer::new(4);
        b.update([(&g(0b01), 1.0), (&g(0b10), 2.0)]);
        assert_eq!(b.select_feedback(&g(0)), Some(&g(0b10)));
        let mut b = ExperienceBuffer::new(4);
        b.update([(&g(0b01), 1.0), (&g(0b10), 1.0)]);
        assert_eq!(b.select_feedback(&g(0)), Some(&g(0b01)));
    }
}
