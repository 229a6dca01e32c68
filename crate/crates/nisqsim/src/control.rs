//! Latency-accurate behavioral model of the classical control system that
//! drives a small quantum device.
//!
//! The model is a single in-order dispatcher feeding two pools of
//! converter channels: digital-to-analog (DA) channels that play gate and
//! measurement stimulus pulses, and analog-to-digital (AD) channels that
//! capture measurement responses. Instructions dispatch strictly in
//! program order but do not block each other: each reserves its channels
//! at dispatch and starts as soon as its qubits and reserved channels are
//! free. Only two things stall the dispatcher itself: a `wait`
//! (barrier + pause) and a conditional, which must hold until the
//! measurement that produced its guard bit has finished.
//!
//! All times are kept in integer picoseconds on the controller's clock
//! grid; configured latencies are rounded *up* to whole clock cycles.

use crate::program::{Instruction, Program};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum ControlError {
    #[error("clock frequency must be positive, got {0}")]
    BadClock(f64),
    #[error("latency `{name}` must be non-negative, got {value}")]
    BadLatency { name: &'static str, value: f64 },
    #[error("`{name}` requires {needed} channels but the pool has {available}")]
    PoolTooSmall { name: &'static str, needed: u32, available: u32 },
    #[error("channel demand `{name}` must be at least 1")]
    ZeroDemand { name: &'static str },
    #[error("config: {0}")]
    BadConfig(String),
    #[error("io: {0}")]
    Io(String),
}

/// Size of a converter-channel pool.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ChannelCount {
    Finite(u32),
    /// Unbounded pool: channels never constrain start times. Utilization
    /// is then reported against the peak number of channels in use.
    Infinite,
}

impl ChannelCount {
    pub fn finite(&self) -> Option<u32> {
        match self {
            ChannelCount::Finite(n) => Some(*n),
            ChannelCount::Infinite => None,
        }
    }
}

impl std::fmt::Display for ChannelCount {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ChannelCount::Finite(n) => write!(f, "{n}"),
            ChannelCount::Infinite => write!(f, "inf"),
        }
    }
}

impl std::str::FromStr for ChannelCount {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "inf" | "infinite" | "unlimited" => Ok(ChannelCount::Infinite),
            other => other
                .parse::<u32>()
                .map(ChannelCount::Finite)
                .map_err(|e| format!("bad channel count {other:?}: {e}")),
        }
    }
}

impl Serialize for ChannelCount {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            ChannelCount::Finite(n) => s.serialize_u32(*n),
            ChannelCount::Infinite => s.serialize_str("inf"),
        }
    }
}

impl<'de> Deserialize<'de> for ChannelCount {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Number(u32),
            Text(String),
        }
        match Raw::deserialize(d)? {
            Raw::Number(n) => Ok(ChannelCount::Finite(n)),
            Raw::Text(t) => t.parse().map_err(D::Error::custom),
        }
    }
}

/// Control-system parameters. All latencies are physical durations that
/// get rounded up to whole clock cycles.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ControlConfig {
    /// Controller clock frequency in Hz.
    pub clock_hz: f64,
    /// Single-qubit gate pulse duration (ns).
    pub lat_1q_ns: f64,
    /// Two-qubit gate pulse duration (ns).
    pub lat_2q_ns: f64,
    /// Measurement duration from stimulus to discriminated bit (ns).
    pub lat_meas_ns: f64,
    /// How long a reset holds its qubit (ns); passive decay wants several
    /// T1 times.
    pub reset_hold_ns: f64,
    /// Fixed startup offset added to every schedule (ns).
    pub startup_ns: f64,
    /// DA (stimulus) channel pool size.
    pub da_channels: ChannelCount,
    /// AD (capture) channel pool size.
    pub ad_channels: ChannelCount,
    /// DA channels a single-qubit gate occupies.
    pub da_per_1q: u32,
    /// DA channels a two-qubit gate occupies (drive + coupler lines).
    pub da_per_2q: u32,
    /// DA channels a measurement stimulus occupies.
    pub da_per_meas: u32,
    /// AD channels a measurement capture occupies.
    pub ad_per_meas: u32,
}

impl Default for ControlConfig {
    fn default() -> Self {
        Self::qcb_baseline()
    }
}

impl ControlConfig {
    /// The reference control-board profile: 200 MHz clock, 20/40 ns
    /// gates, 300 ns measurement, 3 DA + 1 AD channels, two-qubit gates
    /// taking 3 DA channels (two drives plus a coupler).
    pub fn qcb_baseline() -> Self {
        ControlConfig {
            clock_hz: 200e6,
            lat_1q_ns: 20.0,
            lat_2q_ns: 40.0,
            lat_meas_ns: 300.0,
            reset_hold_ns: 250_000.0, // 5 × a 50 µs T1
            startup_ns: 0.0,
            da_channels: ChannelCount::Finite(3),
            ad_channels: ChannelCount::Finite(1),
            da_per_1q: 1,
            da_per_2q: 3,
            da_per_meas: 1,
            ad_per_meas: 1,
        }
    }

    /// A profile patterned after published transmon-platform numbers:
    /// slower gates (50/300 ns), cross-resonance two-qubit gates driven
    /// over 2 DA channels, 2 DA + 2 AD converters.
    pub fn ibm_experimental() -> Self {
        ControlConfig {
            clock_hz: 200e6,
            lat_1q_ns: 50.0,
            lat_2q_ns: 300.0,
            lat_meas_ns: 300.0,
            reset_hold_ns: 250_000.0,
            startup_ns: 0.0,
            da_channels: ChannelCount::Finite(2),
            ad_channels: ChannelCount::Finite(2),
            da_per_1q: 1,
            da_per_2q: 2,
            da_per_meas: 1,
            ad_per_meas: 1,
        }
    }

    pub fn preset(name: &str) -> Option<Self> {
        match name {
            "qcb-baseline" => Some(Self::qcb_baseline()),
            "ibm-experimental" => Some(Self::ibm_experimental()),
            _ => None,
        }
    }

    pub fn from_json(text: &str) -> Result<Self, ControlError> {
        let cfg: ControlConfig =
            serde_json::from_str(text).map_err(|e| ControlError::BadConfig(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &std::path::Path) -> Result<Self, ControlError> {
        let text = std::fs::read_to_string(path).map_err(|e| ControlError::Io(e.to_string()))?;
        Self::from_json(&text)
    }

    pub fn validate(&self) -> Result<(), ControlError> {
        if !self.clock_hz.is_finite() || self.clock_hz <= 0.0 {
            return Err(ControlError::BadClock(self.clock_hz));
        }
        for (name, value) in [
            ("lat_1q_ns", self.lat_1q_ns),
            ("lat_2q_ns", self.lat_2q_ns),
            ("lat_meas_ns", self.lat_meas_ns),
            ("reset_hold_ns", self.reset_hold_ns),
            ("startup_ns", self.startup_ns),
        ] {
            if !value.is_finite() || value < 0.0 {
                return Err(ControlError::BadLatency { name, value });
            }
        }
        for (name, demand) in [
            ("da_per_1q", self.da_per_1q),
            ("da_per_2q", self.da_per_2q),
            ("da_per_meas", self.da_per_meas),
            ("ad_per_meas", self.ad_per_meas),
        ] {
            if demand == 0 {
                return Err(ControlError::ZeroDemand { name });
            }
        }
        let da_demand = [
            ("da_per_1q", self.da_per_1q),
            ("da_per_2q", self.da_per_2q),
            ("da_per_meas", self.da_per_meas),
        ];
        if let Some(n) = self.da_channels.finite() {
            for (name, needed) in da_demand {
                if needed > n {
                    return Err(ControlError::PoolTooSmall { name, needed, available: n });
                }
            }
        }
        if let Some(n) = self.ad_channels.finite() {
            if self.ad_per_meas > n {
                return Err(ControlError::PoolTooSmall {
                    name: "ad_per_meas",
                    needed: self.ad_per_meas,
                    available: n,
                });
            }
        }
        Ok(())
    }

    /// Clock period in integer picoseconds.
    pub fn period_ps(&self) -> u64 {
        (1e12 / self.clock_hz).round().max(1.0) as u64
    }

    /// A latency in nanoseconds rounded up to whole clock cycles, in ps.
    fn cycles_ps(&self, lat_ns: f64) -> u64 {
        let period = self.period_ps();
        let ps = (lat_ns * 1000.0).round() as u64;
        ps.div_ceil(period) * period
    }
}

/// Observer of the instruction stream as the controller executes it.
/// Callbacks arrive in dispatch (program) order; a conditional's body is
/// reported only when its guard passed. `measure` must return the bit the
/// device produced — it feeds later conditional guards and the final
/// outcome word.
pub trait ExecutionListener {
    fn gate(&mut self, _instr_index: usize, _instr: &Instruction) {}
    fn measure(&mut self, instr_index: usize, qubit: usize, cbit: usize) -> u8;
    fn reset(&mut self, _instr_index: usize, _qubit: usize) {}
}

/// Every measurement returns the same bit.
pub struct ConstantOutcomes(pub u8);

impl ExecutionListener for ConstantOutcomes {
    fn measure(&mut self, _instr_index: usize, _qubit: usize, _cbit: usize) -> u8 {
        self.0
    }
}

/// Unbiased coin-flip measurement results from a seeded stream.
pub struct RandomOutcomes(ChaCha8Rng);

impl RandomOutcomes {
    pub fn new(seed: u64) -> Self {
        RandomOutcomes(ChaCha8Rng::seed_from_u64(seed))
    }
}

impl ExecutionListener for RandomOutcomes {
    fn measure(&mut self, _instr_index: usize, _qubit: usize, _cbit: usize) -> u8 {
        use rand::Rng;
        u8::from(self.0.gen::<f64>() < 0.5)
    }
}

/// Timing record of one program instruction.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InstructionRecord {
    pub instr_index: usize,
    /// When the dispatcher processed the instruction.
    pub dispatch_ps: u64,
    /// When its pulses began (equals `dispatch_ps` for untimed entries).
    pub start_ps: u64,
    /// When its qubits and channels free up.
    pub end_ps: u64,
    /// DA channel ids occupied over `[start, end)`.
    pub da: Vec<u32>,
    /// AD channel ids occupied over `[start, end)`.
    pub ad: Vec<u32>,
    /// False only for a conditional whose guard failed.
    pub executed: bool,
}

/// Full schedule of one program run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExecutionStats {
    pub clock_period_ps: u64,
    pub startup_ps: u64,
    /// `startup + max end` over all records (just `startup` when empty).
    pub total_time_ps: u64,
    pub records: Vec<InstructionRecord>,
    /// Channels that were ever occupied (for unbounded pools this is the
    /// peak allocation; for finite pools it is at most the pool size).
    pub da_channels_used: u32,
    pub ad_channels_used: u32,
    /// Final classical register (bit `c` of the word is classical bit `c`).
    pub outcome_word: u64,
    /// How many conditionals had a passing guard.
    pub conditional_fires: u64,
    pub warnings: Vec<String>,
}

impl ExecutionStats {
    pub fn total_time_ns(&self) -> f64 {
        self.total_time_ps as f64 / 1000.0
    }
}

/// One converter-channel pool with in-order reservation: the requester
/// takes the `k` channels that free earliest (ties to the lowest id); an
/// unbounded pool reuses any channel already free by `earliest` and mints
/// new ones for the rest.
struct Pool {
    free_at: Vec<u64>,
    bounded: bool,
}

impl Pool {
    fn new(count: ChannelCount) -> Pool {
        match count {
            ChannelCount::Finite(n) => Pool { free_at: vec![0; n as usize], bounded: true },
            ChannelCount::Infinite => Pool { free_at: Vec::new(), bounded: false },
        }
    }

    /// Reserve `k` channels no earlier than `earliest`; returns the chosen
    /// ids and the time all of them are free.
    fn reserve(&mut self, k: u32, earliest: u64) -> (Vec<u32>, u64) {
        let k = k as usize;
        let mut ids: Vec<u32>;
        if self.bounded {
            let mut order: Vec<u32> = (0..self.free_at.len() as u32).collect();
            order.sort_by_key(|&id| (self.free_at[id as usize], id));
            ids = order[..k].to_vec();
        } else {
            ids = (0..self.free_at.len() as u32)
                .filter(|&id| self.free_at[id as usize] <= earliest)
                .take(k)
                .collect();
            while ids.len() < k {
                ids.push(self.free_at.len() as u32);
                self.free_at.push(0);
            }
        }
        ids.sort_unstable();
        let ready = ids.iter().map(|&id| self.free_at[id as usize]).max().unwrap_or(0);
        (ids, ready.max(earliest))
    }

    fn occupy(&mut self, ids: &[u32], until: u64) {
        for &id in ids {
            self.free_at[id as usize] = until;
        }
    }

    fn used(&self) -> u32 {
        if self.bounded {
            self.free_at.iter().filter(|&&t| t > 0).count() as u32
        } else {
            self.free_at.len() as u32
        }
    }
}

/// Execute `program` on the control system described by `cfg`, reporting
/// measurement results to (and taking their values from) `listener`.
pub fn simulate(
    program: &Program,
    cfg: &ControlConfig,
    listener: &mut dyn ExecutionListener,
) -> Result<ExecutionStats, ControlError> {
    cfg.validate()?;
    let period = cfg.period_ps();
    let startup = cfg.cycles_ps(cfg.startup_ns);
    let dur_1q = cfg.cycles_ps(cfg.lat_1q_ns);
    let dur_2q = cfg.cycles_ps(cfg.lat_2q_ns);
    let dur_meas = cfg.cycles_ps(cfg.lat_meas_ns);
    let dur_reset = cfg.cycles_ps(cfg.reset_hold_ns);

    let mut da = Pool::new(cfg.da_channels);
    let mut ad = Pool::new(cfg.ad_channels);
    let mut qubit_free = vec![0u64; program.qubits()];
    // (value, end time of the measurement that wrote it)
    let mut cbit: Vec<Option<(u8, u64)>> = vec![None; program.cbits()];
    let mut dispatch_now = 0u64;
    let mut horizon = 0u64; // max end over everything dispatched
    let mut records = Vec::with_capacity(program.len());
    let mut warnings = Vec::new();
    let mut fires = 0u64;

    for (index, instr) in program.instructions().iter().enumerate() {
        let mut effective = instr;
        let mut executed = true;
        let mut dispatch = dispatch_now;
        if let Instruction::If { cbit: guard, value, inner } = instr {
            // The guard bit must exist before the conditional can issue.
            match cbit[*guard] {
                Some((bit, written_at)) => {
                    dispatch = dispatch.max(written_at);
                    executed = bit == *value;
                }
                None => {
                    warnings.push(format!(
                        "instruction {index}: conditional reads classical bit {guard} \
                         before any measurement wrote it; it reads 0"
                    ));
                    executed = 0 == *value;
                }
            }
            dispatch_now = dispatch;
            effective = inner;
        }
        if !executed {
            records.push(InstructionRecord {
                instr_index: index,
                dispatch_ps: dispatch,
                start_ps: dispatch,
                end_ps: dispatch,
                da: vec![],
                ad: vec![],
                executed: false,
            });
            continue;
        }
        match effective {
            Instruction::U { qubit, .. } => {
                let earliest = dispatch.max(qubit_free[*qubit]);
                let (ids, ready) = da.reserve(cfg.da_per_1q, earliest);
                let start = ready.max(earliest);
                let end = start + dur_1q;
                da.occupy(&ids, end);
                qubit_free[*qubit] = end;
                horizon = horizon.max(end);
                listener.gate(index, effective);
                records.push(InstructionRecord {
                    instr_index: index,
                    dispatch_ps: dispatch,
                    start_ps: start,
                    end_ps: end,
                    da: ids,
                    ad: vec![],
                    executed: true,
                });
            }
            Instruction::Cx { control, target } => {
                let earliest = dispatch.max(qubit_free[*control]).max(qubit_free[*target]);
                let (ids, ready) = da.reserve(cfg.da_per_2q, earliest);
                let start = ready.max(earliest);
                let end = start + dur_2q;
                da.occupy(&ids, end);
                qubit_free[*control] = end;
                qubit_free[*target] = end;
                horizon = horizon.max(end);
                listener.gate(index, effective);
                records.push(InstructionRecord {
                    instr_index: index,
                    dispatch_ps: dispatch,
                    start_ps: start,
                    end_ps: end,
                    da: ids,
                    ad: vec![],
                    executed: true,
                });
            }
            Instruction::Measure { qubit, cbit: target } => {
                let earliest = dispatch.max(qubit_free[*qubit]);
                let (da_ids, da_ready) = da.reserve(cfg.da_per_meas, earliest);
                let (ad_ids, ad_ready) = ad.reserve(cfg.ad_per_meas, earliest);
                let start = earliest.max(da_ready).max(ad_ready);
                let end = start + dur_meas;
                da.occupy(&da_ids, end);
                ad.occupy(&ad_ids, end);
                qubit_free[*qubit] = end;
                horizon = horizon.max(end);
                let bit = listener.measure(index, *qubit, *target);
                cbit[*target] = Some((bit & 1, end));
                records.push(InstructionRecord {
                    instr_index: index,
                    dispatch_ps: dispatch,
                    start_ps: start,
                    end_ps: end,
                    da: da_ids,
                    ad: ad_ids,
                    executed: true,
                });
            }
            Instruction::Reset { qubit } => {
                // A passive decay hold: occupies the qubit, not a channel.
                let start = dispatch.max(qubit_free[*qubit]);
                let end = start + dur_reset;
                qubit_free[*qubit] = end;
                horizon = horizon.max(end);
                listener.reset(index, *qubit);
                records.push(InstructionRecord {
                    instr_index: index,
                    dispatch_ps: dispatch,
                    start_ps: start,
                    end_ps: end,
                    da: vec![],
                    ad: vec![],
                    executed: true,
                });
            }
            Instruction::Wait { cycles } => {
                // Barrier: wait for everything in flight, then idle.
                let barrier = dispatch.max(horizon);
                let resume = barrier + u64::from(*cycles) * period;
                records.push(InstructionRecord {
                    instr_index: index,
                    dispatch_ps: dispatch,
                    start_ps: barrier,
                    end_ps: resume,
                    da: vec![],
                    ad: vec![],
                    executed: true,
                });
                dispatch_now = resume;
                horizon = horizon.max(resume);
            }
            Instruction::If { .. } => unreachable!("conditionals cannot nest"),
        }
        if matches!(instr, Instruction::If { .. }) {
            fires += 1;
        }
    }

    let total = startup + horizon;
    let mut outcome = 0u64;
    for (i, slot) in cbit.iter().enumerate() {
        if let Some((bit, _)) = slot {
            outcome |= u64::from(*bit) << i;
        }
    }
    // Shift the whole schedule by the startup offset so record times are
    // absolute.
    if startup > 0 {
        for r in &mut records {
            r.dispatch_ps += startup;
            r.start_ps += startup;
            r.end_ps += startup;
        }
    }
    Ok(ExecutionStats {
        clock_period_ps: period,
        startup_ps: startup,
        total_time_ps: total,
        records,
        da_channels_used: da.used(),
        ad_channels_used: ad.used(),
        outcome_word: outcome,
        conditional_fires: fires,
        warnings,
    })
}

/// Channel occupancy over a time window.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct UtilizationReport {
    pub window_start_ns: f64,
    pub window_end_ns: f64,
    /// Busy-channel-time divided by pool-size × window length.
    pub da_busy_fraction: f64,
    /// Most DA channels simultaneously busy at any instant of the window.
    pub da_peak_active: u32,
    pub ad_busy_fraction: f64,
    pub ad_peak_active: u32,
}

/// Occupancy of both pools over `[start_ns, end_ns)`. For unbounded pools
/// the denominator is the peak allocation of the run.
pub fn utilization(
    stats: &ExecutionStats,
    cfg: &ControlConfig,
    start_ns: f64,
    end_ns: f64,
) -> UtilizationReport {
    let w0 = (start_ns * 1000.0).round() as u64;
    let w1 = (end_ns * 1000.0).round() as u64;
    let window = w1.saturating_sub(w0);
    let da_pool = cfg.da_channels.finite().unwrap_or(stats.da_channels_used).max(1);
    let ad_pool = cfg.ad_channels.finite().unwrap_or(stats.ad_channels_used).max(1);

    let mut da_busy = 0u64;
    let mut ad_busy = 0u64;
    // (time, +active ΔDA, ΔAD) events for the peak sweep.
    let mut events: Vec<(u64, i64, i64)> = Vec::new();
    for r in &stats.records {
        if !r.executed || r.end_ps <= w0 || r.start_ps >= w1 {
            continue;
        }
        let lo = r.start_ps.max(w0);
        let hi = r.end_ps.min(w1);
        if hi <= lo {
            continue;
        }
        da_busy += (hi - lo) * r.da.len() as u64;
        ad_busy += (hi - lo) * r.ad.len() as u64;
        if !r.da.is_empty() || !r.ad.is_empty() {
            events.push((lo, r.da.len() as i64, r.ad.len() as i64));
            events.push((hi, -(r.da.len() as i64), -(r.ad.len() as i64)));
        }
    }
    events.sort_by_key(|&(t, dda, dad)| (t, dda.min(dad))); // releases before acquisitions at ties
    let (mut cur_da, mut cur_ad) = (0i64, 0i64);
    let (mut peak_da, mut peak_ad) = (0i64, 0i64);
    for (_, dda, dad) in events {
        cur_da += dda;
        cur_ad += dad;
        peak_da = peak_da.max(cur_da);
        peak_ad = peak_ad.max(cur_ad);
    }
    let frac = |busy: u64, pool: u32| {
        if window == 0 {
            0.0
        } else {
            busy as f64 / (pool as u64 * window) as f64
        }
    };
    UtilizationReport {
        window_start_ns: start_ns,
        window_end_ns: end_ns,
        da_busy_fraction: frac(da_busy, da_pool),
        da_peak_active: peak_da as u32,
        ad_busy_fraction: frac(ad_busy, ad_pool),
        ad_peak_active: peak_ad as u32,
    }
}

/// One point of a DA-channel-count sweep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SweepPoint {
    pub da_channels: ChannelCount,
    pub total_time_ns: f64,
}

/// Total execution time as a function of the DA pool size. With
/// `include_measures = false`, measurements (and the conditionals that
/// depend on them) are stripped first, isolating gate traffic.
pub fn channel_sweep(
    program: &Program,
    base: &ControlConfig,
    counts: &[ChannelCount],
    include_measures: bool,
) -> Result<Vec<SweepPoint>, ControlError> {
    let stripped;
    let program = if include_measures {
        program
    } else {
        stripped = strip_measurements(program);
        &stripped
    };
    let mut out = Vec::with_capacity(counts.len());
    for &count in counts {
        let mut cfg = base.clone();
        cfg.da_channels = count;
        let stats = simulate(program, &cfg, &mut ConstantOutcomes(0))?;
        out.push(SweepPoint { da_channels: count, total_time_ns: stats.total_time_ns() });
    }
    Ok(out)
}

/// Copy of `program` without measurements or conditionals.
pub fn strip_measurements(program: &Program) -> Program {
    let mut out = Program::with_register_names(
        program.qubits(),
        program.cbits(),
        program.qreg_name(),
        program.creg_name(),
    )
    .expect("source program has valid registers");
    for instr in program.instructions() {
        match instr {
            Instruction::Measure { .. } | Instruction::If { .. } => {}
            other => out.add(other.clone()).expect("instruction was valid in the source"),
        }
    }
    out
}

/// Lower bound on any schedule: the startup offset plus, for the busiest
/// qubit, the sum of its operations' durations. Channel pressure and
/// dispatch stalls can only add to this.
pub fn critical_path_ps(program: &Program, cfg: &ControlConfig) -> u64 {
    let mut per_qubit = vec![0u64; program.qubits()];
    let dur_1q = cfg.cycles_ps(cfg.lat_1q_ns);
    let dur_2q = cfg.cycles_ps(cfg.lat_2q_ns);
    let dur_meas = cfg.cycles_ps(cfg.lat_meas_ns);
    let dur_reset = cfg.cycles_ps(cfg.reset_hold_ns);
    for instr in program.instructions() {
        // Conditionals may or may not run — they contribute no guaranteed
        // time. Waits depend on global state, likewise skipped.
        let (qubits, dur) = match instr {
            Instruction::U { qubit, .. } => (vec![*qubit], dur_1q),
            Instruction::Cx { control, target } => (vec![*control, *target], dur_2q),
            Instruction::Measure { qubit, .. } => (vec![*qubit], dur_meas),
            Instruction::Reset { qubit } => (vec![*qubit], dur_reset),
            Instruction::If { .. } | Instruction::Wait { .. } => (vec![], 0),
        };
        for q in qubits {
            per_qubit[q] += dur;
        }
    }
    cfg.cycles_ps(cfg.startup_ns) + per_qubit.into_iter().max().unwrap_or(0)
}
