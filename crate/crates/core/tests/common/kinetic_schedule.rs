use fairtopk::geometry::DualLine;
use fairtopk::kinetic::{perturbed_cmp, Coord, KineticTournament, Mode};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub fn random_line(rng: &mut ChaCha8Rng, owner: usize, pool: &[DualLine]) -> DualLine {
    // reuse an existing line now and then to force identical lines
    if !pool.is_empty() && rng.random_bool(0.15) {
        let src = pool[rng.random_range(0..pool.len())];
        return DualLine { owner, stable_index: owner, protected: rng.random_bool(0.5), ..src };
    }
    let p1 = rng.random_range(0..=20i64) * 50;
    let p2 = rng.random_range(0..=20i64) * 50;
    DualLine { owner, slope: p1 - p2, intercept: p2, stable_index: owner, protected: rng.random_bool(0.5) }
}

pub fn naive_top(lines: &[DualLine], mode: Mode, t: Coord) -> DualLine {
    let best = lines.iter().copied().max_by(|a, b| perturbed_cmp(a, b, t)).unwrap();
    let worst = lines.iter().copied().min_by(|a, b| perturbed_cmp(a, b, t)).unwrap();
    match mode {
        Mode::Max => best,
        Mode::Min => worst,
    }
}

pub fn update_bound(n: usize) -> usize {
    2 * (n as f64).log2().ceil() as usize + 1
}

/// Runs one schedule, checking the queue against naive scans after every
/// quiescent step. Returns the number of `advance` calls made.
pub fn run_schedule(seed: u64) -> Result<usize, String> {
    let mut rng = super::rng(seed);
    let n = rng.random_range(1..=64usize);
    let mut pool = Vec::new();
    for owner in 0..n {
        let l = random_line(&mut rng, owner, &pool);
        pool.push(l);
    }
    let mode = if rng.random_bool(0.5) { Mode::Max } else { Mode::Min };
    let mut q = KineticTournament::build(pool.clone(), mode, Coord::zero()).map_err(|e| e.to_string())?;
    let mut next_owner = n;
    let end = Coord::new(1, 1);
    let mut advances = 0;
    let check = |q: &KineticTournament, what: &str| -> Result<(), String> {
        let top = naive_top(q.lines(), mode, q.now());
        if q.top().owner != top.owner {
            return Err(format!("seed {seed}: top {} != naive {} after {what} at {:?}", q.top().owner, top.owner, q.now()));
        }
        let pg = q.lines().iter().filter(|l| l.protected).count();
        if q.pg_count() != pg {
            return Err(format!("seed {seed}: pg {} != naive {pg}", q.pg_count()));
        }
        Ok(())
    };
    check(&q, "build")?;
    for _ in 0..400 {
        let next = q.next_event_time().filter(|&t| t <= end);
        match rng.random_range(0..3) {
            0 if next.is_some() => {
                let t = next.unwrap();
                let before = q.top().owner;
                // between the previous coordinate and t the top must not change
                let mid = Coord::new(q.now().num() * t.den() + t.num() * q.now().den(), 2 * q.now().den() * t.den());
                if mid > q.now() && mid < t && naive_top(q.lines(), mode, mid).owner != before {
                    return Err(format!("seed {seed}: top changed before the next event"));
                }
                while q.next_event_time() == Some(t) {
                    q.advance().map_err(|e| e.to_string())?;
                    advances += 1;
                    if q.last_update_count() > update_bound(q.len()) {
                        return Err(format!("seed {seed}: {} updates on advance", q.last_update_count()));
                    }
                }
                check(&q, "advance")?;
            }
            1 => {
                let leaf = q.lines()[rng.random_range(0..q.len())].owner;
                let line = random_line(&mut rng, next_owner, q.lines());
                next_owner += 1;
                q.replace(leaf, line).map_err(|e| e.to_string())?;
                if q.last_update_count() > update_bound(q.len()) {
                    return Err(format!("seed {seed}: {} updates on replace", q.last_update_count()));
                }
                if q.next_event_time().is_some_and(|t| t == q.now()) {
                    while q.next_event_time() == Some(q.now()) {
                        q.advance().map_err(|e| e.to_string())?;
                    advances += 1;
                    }
                }
                check(&q, "replace")?;
            }
            _ => {
                let limit = next.unwrap_or(end);
                if limit > q.now() {
                    let den = 1000i128;
                    let lo = (q.now().to_f64() * den as f64).ceil() as i128;
                    let hi = (limit.to_f64() * den as f64).floor() as i128;
                    if lo <= hi {
                        let t = Coord::new(rng.random_range(lo..=hi), den).min(limit).max(q.now());
                        q.fast_forward(t).map_err(|e| e.to_string())?;
                        while q.next_event_time() == Some(q.now()) {
                            q.advance().map_err(|e| e.to_string())?;
                    advances += 1;
                        }
                        check(&q, "fast-forward")?;
                    }
                }
            }
        }
        if q.next_event_time().is_none() && q.now() >= end {
            break;
        }
    }
    Ok(advances)
}

