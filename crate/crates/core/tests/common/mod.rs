#![allow(dead_code)]

use dcov_core::{seed, PairedSample, Point, Space};
use rand::Rng;

#[derive(Debug, Clone, Copy)]
pub enum Kind {
    Euclidean(usize),
    Discrete(u32),
    Hilbert(usize),
}

pub fn space(kind: Kind, beta: f64) -> Space {
    let s = match kind {
        Kind::Euclidean(d) => Space::euclidean(d),
        Kind::Discrete(m) => Space::discrete(m),
        Kind::Hilbert(d) => Space::hilbert_l2(d),
    };
    s.with_beta(beta).unwrap()
}

pub fn point<R: Rng>(kind: Kind, rng: &mut R) -> Point {
    match kind {
        Kind::Euclidean(d) => Point::vector(
            (0..d)
                .map(|_| rng.random_range(-3.0..3.0))
                .collect::<Vec<f64>>(),
        ),
        Kind::Discrete(m) => Point::symbol(rng.random_range(0..m)),
        Kind::Hilbert(d) => {
            // Shorter vectors are zero-padded by the space.
            let len = rng.random_range(1..=d);
            Point::vector(
                (0..len)
                    .map(|_| rng.random_range(-2.0..2.0))
                    .collect::<Vec<f64>>(),
            )
        }
    }
}

pub fn random_sample(
    kx: Kind,
    ky: Kind,
    beta_x: f64,
    beta_y: f64,
    n: usize,
    seed_value: u64,
) -> PairedSample {
    let mut rng = seed::rng(seed_value);
    let xs: Vec<Point> = (0..n).map(|_| point(kx, &mut rng)).collect();
    let ys: Vec<Point> = (0..n).map(|_| point(ky, &mut rng)).collect();
    PairedSample::new(xs, ys, space(kx, beta_x), space(ky, beta_y)).unwrap()
}

/// `y = x + noise` on the real line, so the pair is dependent.
pub fn dependent_reals(n: usize, noise: f64, seed_value: u64) -> PairedSample {
    let mut rng = seed::rng(seed_value);
    let mut xs = Vec::with_capacity(n);
    let mut ys = Vec::with_capacity(n);
    for _ in 0..n {
        let x: f64 = rng.random_range(-1.0..1.0);
        xs.push(Point::scalar(x));
        ys.push(Point::scalar(x + noise * rng.random_range(-1.0..1.0)));
    }
    PairedSample::new(xs, ys, Space::euclidean(1), Space::euclidean(1)).unwrap()
}

pub fn all_kinds() -> [Kind; 4] {
    [
        Kind::Euclidean(1),
        Kind::Euclidean(3),
        Kind::Discrete(3),
        Kind::Hilbert(4),
    ]
}

/// Runs jobs last-to-first on scoped threads, then restores index order.
#[derive(Debug, Clone, Copy)]
pub struct Scrambled {
    pub threads: usize,
}

impl dcov_core::Executor for Scrambled {
    fn map<T, F>(&self, count: usize, job: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync + Send,
    {
        let threads = self.threads.max(1);
        let job = &job;
        let mut chunks: Vec<Vec<(usize, T)>> = std::thread::scope(|scope| {
            let handles: Vec<_> = (0..threads)
                .map(|w| {
                    scope.spawn(move || {
                        (0..count)
                            .rev()
                            .filter(|i| i % threads == w)
                            .map(|i| (i, job(i)))
                            .collect::<Vec<_>>()
                    })
                })
                .collect();
            handles.into_iter().map(|h| h.join().unwrap()).collect()
        });
        let mut all: Vec<(usize, T)> = chunks.drain(..).flatten().collect();
        all.sort_by_key(|(i, _)| *i);
        all.into_iter().map(|(_, t)| t).collect()
    }
}
