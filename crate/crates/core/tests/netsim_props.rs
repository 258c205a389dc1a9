use drsim::netsim::SendOutcome;
use drsim::{Channel, ChannelConfig, EventQueue};
use proptest::prelude::*;

fn trace(cfg: ChannelConfig<f64>, n: usize) -> (Vec<SendOutcome<f64>>, Vec<(f64, usize)>) {
    let mut q = EventQueue::new();
    let mut ch = Channel::new(cfg).unwrap();
    let mut outcomes = vec![];
    let mut delivered = vec![];
    for i in 0..n {
        let now = i as f64 * 0.01;
        q.run_until(now, |t, e| {
            delivered.push((t, e));
            Ok(())
        })
        .unwrap();
        outcomes.push(ch.send(&mut q, i, now).unwrap());
    }
    q.run_until(1e9, |t, e| {
        delivered.push((t, e));
        Ok(())
    })
    .unwrap();
    (outcomes, delivered)
}

fn cfg(delay: f64, jitter: f64, loss: f64, seed: u64, reorder: bool) -> ChannelConfig<f64> {
    ChannelConfig { base_delay: delay, jitter: jitter.min(delay), loss, seed, reorder_allowed: reorder }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn causality_and_bounds(delay in 0.0f64..0.5, jf in 0.0f64..1.0, loss in 0.0f64..0.5, seed: u64, reorder: bool) {
        let c = cfg(delay, delay * jf, loss, seed, reorder);
        let (outcomes, delivered) = trace(c, 500);
        for (i, o) in outcomes.iter().enumerate() {
            if let SendOutcome::Scheduled { due, jitter } = *o {
                let sent = i as f64 * 0.01;
                prop_assert!(due >= sent);
                prop_assert!(jitter.abs() <= c.jitter);
                if reorder {
                    prop_assert!((due - (sent + c.base_delay + jitter)).abs() < 1e-12);
                }
            }
        }
        let survivors = outcomes.iter().filter(|o| matches!(o, SendOutcome::Scheduled { .. })).count();
        prop_assert_eq!(delivered.len(), survivors);
        prop_assert!(delivered.windows(2).all(|w| w[0].0 <= w[1].0));
    }

    #[test]
    fn fifo_when_reordering_disabled(delay in 0.01f64..0.5, loss in 0.0f64..0.5, seed: u64) {
        let (_, delivered) = trace(cfg(delay, delay, loss, seed, false), 500);
        prop_assert!(delivered.windows(2).all(|w| w[0].1 < w[1].1));
    }

    #[test]
    fn seed_determinism(delay in 0.0f64..0.5, loss in 0.0f64..0.5, seed: u64) {
        let c = cfg(delay, delay / 2.0, loss, seed, true);
        prop_assert_eq!(trace(c, 300), trace(c, 300));
    }

    #[test]
    fn loss_frequency(loss in 0.0f64..1.0, seed: u64) {
        let n = 100_000usize;
        let mut q = EventQueue::<f64, ()>::new();
        let mut ch = Channel::new(cfg(0.0, 0.0, loss, seed, true)).unwrap();
        for _ in 0..n {
            ch.send(&mut q, (), 0.0).unwrap();
        }
        let empirical = ch.stats().dropped as f64 / n as f64;
        let tol = 4.0 * (loss * (1.0 - loss) / n as f64).sqrt();
        prop_assert!((empirical - loss).abs() <= tol + 1e-12, "loss {} empirical {}", loss, empirical);
    }
}

#[test]
fn changing_loss_keeps_the_jitter_stream() {
    let (a, _) = trace(cfg(0.1, 0.05, 0.0, 7, true), 200);
    let (b, _) = trace(cfg(0.1, 0.05, 0.3, 7, true), 200);
    for (x, y) in a.iter().zip(&b) {
        if let (SendOutcome::Scheduled { jitter: ja, .. }, SendOutcome::Scheduled { jitter: jb, .. }) = (x, y) {
            assert_eq!(ja, jb);
        }
    }
}
