//! The model × scenario × temperature × sample sampling grid.

use std::sync::{Condvar, Mutex};

use crate::client::{query_model, ChatBackend, ModelEndpoint};
use crate::error::{Error, Result};
use crate::scenario::Scenario;
use crate::transcript::{sort_results, SampleResult, TranscriptWriter};

pub const TEMPERATURES: [f64; 2] = [0.05, 0.30];
pub const SAMPLES_PER_CELL: u32 = 3;
pub const MAX_IN_FLIGHT: usize = 4;

#[derive(Debug, Clone, PartialEq)]
pub struct GridSpec {
    pub temperatures: Vec<f64>,
    pub samples: u32,
    pub max_in_flight: usize,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self {
            temperatures: TEMPERATURES.to_vec(),
            samples: SAMPLES_PER_CELL,
            max_in_flight: MAX_IN_FLIGHT,
        }
    }
}

impl GridSpec {
    pub fn call_count(&self, endpoints: usize, scenarios: usize) -> usize {
        endpoints * scenarios * self.temperatures.len() * self.samples as usize
    }
}

struct Semaphore {
    free: Mutex<usize>,
    cv: Condvar,
}

impl Semaphore {
    fn new(n: usize) -> Self {
        Self {
            free: Mutex::new(n),
            cv: Condvar::new(),
        }
    }

    fn acquire(&self) -> Permit<'_> {
        let mut free = self.free.lock().unwrap_or_else(|e| e.into_inner());
        while *free == 0 {
            free = self.cv.wait(free).unwrap_or_else(|e| e.into_inner());
        }
        *free -= 1;
        Permit(self)
    }
}

struct Permit<'a>(&'a Semaphore);

impl Drop for Permit<'_> {
    fn drop(&mut self) {
        *self.0.free.lock().unwrap_or_else(|e| e.into_inner()) += 1;
        self.0.cv.notify_one();
    }
}

/// Run the full grid. Calls to one endpoint are serialised; endpoints run
/// concurrently up to `max_in_flight`. Each record is appended to `writer`
/// as soon as it exists. Returns the records in canonical order.
pub fn run_grid(
    backend: &dyn ChatBackend,
    endpoints: &[ModelEndpoint],
    scenarios: &[Scenario],
    spec: &GridSpec,
    writer: Option<&TranscriptWriter>,
) -> Result<Vec<SampleResult>> {
    if endpoints.is_empty() || scenarios.is_empty() || spec.temperatures.is_empty() || spec.samples == 0 {
        return Err(Error::Config("grid has an empty dimension".into()));
    }
    if spec.max_in_flight == 0 {
        return Err(Error::Config("max_in_flight must be at least 1".into()));
    }
    for e in endpoints {
        e.validate()?;
    }
    for s in scenarios {
        s.validate()?;
    }
    let gate = Semaphore::new(spec.max_in_flight);
    let per_endpoint: Vec<Result<Vec<SampleResult>>> = std::thread::scope(|scope| {
        let handles: Vec<_> = endpoints
            .iter()
            .map(|ep| {
                let gate = &gate;
                scope.spawn(move || {
                    let mut out = Vec::new();
                    for s in scenarios {
                        for &t in &spec.temperatures {
                            for i in 0..spec.samples {
                                let rec = {
                                    let _permit = gate.acquire();
                                    query_model(backend, ep, s, t, i)?
                                };
                                if let Some(w) = writer {
                                    w.append(&rec)?;
                                }
                                out.push(rec);
                            }
                        }
                    }
                    Ok(out)
                })
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().unwrap_or_else(|_| Err(Error::Transport("worker panicked".into()))))
            .collect()
    });
    let mut all = Vec::with_capacity(spec.call_count(endpoints.len(), scenarios.len()));
    for r in per_endpoint {
        all.extend(r?);
    }
    sort_results(&mut all);
    Ok(all)
}
