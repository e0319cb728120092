use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Independent random stream `stream` of a run seeded with `seed`.
pub fn rng_stream(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Epoch-wise shuffled mini-batches over a fixed row set. The last batch of
/// an epoch may be short.
#[derive(Clone, Debug)]
pub struct BatchSampler {
    order: Vec<usize>,
    pos: usize,
    batch: usize,
    rng: ChaCha8Rng,
}

impl BatchSampler {
    pub fn new(rows: &[usize], batch: usize, rng: ChaCha8Rng) -> Self {
        let order = rows.to_vec();
        let pos = order.len();
        Self { order, pos, batch: batch.max(1), rng }
    }

    pub fn next_rows(&mut self) -> Vec<usize> {
        if self.pos >= self.order.len() {
            self.order.shuffle(&mut self.rng);
            self.pos = 0;
        }
        let end = (self.pos + self.batch).min(self.order.len());
        let rows = self.order[self.pos..end].to_vec();
        self.pos = end;
        rows
    }

    /// Batches per pass over the rows.
    pub fn batches_per_epoch(&self) -> usize {
        self.order.len().div_ceil(self.batch)
    }
}
