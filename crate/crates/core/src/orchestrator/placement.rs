//! Placement of environment instances onto workers and parallel collection.
//!
//! Instances are split into contiguous blocks, as evenly as possible, with
//! the remainder going to the lowest-indexed workers. Because every
//! randomness source is owned by the instance, not the worker, the merged
//! event stream is byte-identical for any worker count.

use std::ops::Range;

use crate::error::{Error, Result};
use crate::orchestrator::collector::{InstanceCollector, RoundCtx, StepEvent};
use crate::rng::{derive_stream, TAG_WORKER};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WorkerSlot {
    pub index: usize,
    /// Contiguous instance indices owned by this worker.
    pub instances: Range<usize>,
    /// Reproducible per-worker seed (plan metadata; collection randomness is
    /// per instance).
    pub seed: u64,
    /// Logical channel name the worker reports on.
    pub channel: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PlacementPlan {
    pub workers: Vec<WorkerSlot>,
    pub num_instances: usize,
}

/// Deterministic placement of `num_envs` instances onto `num_workers`
/// workers.
pub fn plan_placement(num_envs: u64, num_workers: u64, seed: u64) -> PlacementPlan {
    let n = num_envs as usize;
    let w = num_workers as usize;
    let base = n / w;
    let remainder = n % w;
    let mut cursor = 0;
    let workers = (0..w)
        .map(|i| {
            let count = base + usize::from(i < remainder);
            let slot = WorkerSlot {
                index: i,
                instances: cursor..cursor + count,
                seed: derive_stream(seed, TAG_WORKER, i as u64),
                channel: format!("chan-{i}"),
            };
            cursor += count;
            slot
        })
        .collect();
    PlacementPlan {
        workers,
        num_instances: n,
    }
}

/// Runs one collection round across all workers and merges the events in
/// instance order. A single-worker plan runs inline; otherwise each worker
/// gets a scoped thread. A failing worker aborts the round.
pub fn collect_parallel(
    plan: &PlacementPlan,
    collectors: &mut [InstanceCollector],
    ctx: &RoundCtx,
) -> Result<Vec<StepEvent>> {
    if collectors.len() != plan.num_instances {
        return Err(Error::InconsistentState(format!(
            "plan covers {} instances, {} collectors given",
            plan.num_instances,
            collectors.len()
        )));
    }
    let run_block = |block: &mut [InstanceCollector]| -> Result<Vec<StepEvent>> {
        let mut events = Vec::with_capacity(block.len() * ctx.steps as usize);
        for collector in block {
            events.extend(collector.run_round(ctx)?);
        }
        Ok(events)
    };

    if plan.workers.len() == 1 {
        return run_block(collectors).map_err(|e| Error::CollectionFailed {
            worker: 0,
            cause: e.to_string(),
        });
    }

    // Carve the collector slice into per-worker contiguous blocks.
    let mut blocks = Vec::with_capacity(plan.workers.len());
    let mut rest = collectors;
    for slot in &plan.workers {
        let (block, tail) = rest.split_at_mut(slot.instances.len());
        blocks.push(block);
        rest = tail;
    }

    std::thread::scope(|scope| {
        let handles: Vec<_> = blocks
            .into_iter()
            .map(|block| scope.spawn(move || run_block(block)))
            .collect();
        let mut merged = Vec::new();
        let mut failure = None;
        for (worker, handle) in handles.into_iter().enumerate() {
            let outcome = handle.join().map_err(|_| Error::CollectionFailed {
                worker,
                cause: "worker panicked".into(),
            })?;
            match outcome {
                Ok(events) => merged.extend(events),
                Err(e) => {
                    failure.get_or_insert(Error::CollectionFailed {
                        worker,
                        cause: e.to_string(),
                    });
                }
            }
        }
        match failure {
            Some(e) => Err(e),
            None => Ok(merged),
        }
    })
}
