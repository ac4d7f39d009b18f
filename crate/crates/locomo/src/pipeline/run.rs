use std::collections::BTreeMap;
use std::f64::consts::TAU;
use std::path::{Path, PathBuf};

use ndarray::Array2;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::{json, Map, Value};

use super::config::{RunConfig, RunStage};
use super::log::{read_log, RunLog};
use super::plot::emit_plots;
use crate::amp::{amp_labels, basic_script, record_experience, Discriminator, ExperienceDataset};
use crate::distill::{distill_update, init_student_from_teacher, DaggerCollector, StudentPolicy, TeacherActor};
use crate::env::{obs, EnvConfig, LocomotionEnv, PushConfig, TerrainMode, GAIT_AGREEMENT};
use crate::error::{Error, Result};
use crate::nets::{load_checkpoint_into, save_checkpoint, Adam, Mlp};
use crate::ppo::{ppo_iteration, ActorCritic, NoStyle, Rollout, StyleScorer, UpdateStats, VectorEnv};
use crate::rewards::{RewardSet, RewardTerm};
use crate::terrain::{level_histogram, TerrainType};

pub type Stage1Policy = ActorCritic<f32, Mlp<f32>>;
pub type Stage2Policy = ActorCritic<f32, TeacherActor<f32>>;

/// Control steps of the deterministic evaluation that closes a Stage-I run.
pub const STAGE1_EVAL_STEPS: usize = 250;
/// Iterations averaged into the "final" training metrics.
pub const FINAL_WINDOW: usize = 10;

/// Outcome of one seed (and style scale) of a run.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SeedOutcome {
    pub seed: u64,
    pub reward_mode: RewardSet,
    pub style_scale: Option<f64>,
    pub artifact: Option<PathBuf>,
    pub metrics: BTreeMap<String, f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunReport {
    pub log: PathBuf,
    pub outcomes: Vec<SeedOutcome>,
}

fn mode_slug(mode: RewardSet) -> &'static str {
    match mode {
        RewardSet::Basic => "br",
        RewardSet::BasicGait => "br-gr",
        RewardSet::BasicExperience => "br-er",
    }
}

fn prepare(cfg: &RunConfig, stage: RunStage, name: &str) -> Result<RunLog> {
    cfg.validate(stage)?;
    let out = &cfg.paths.out;
    std::fs::create_dir_all(out).map_err(|e| Error::io(out, e))?;
    RunLog::create(&out.join(format!("{name}.jsonl")), stage, cfg)
}

fn mean(xs: impl IntoIterator<Item = f64>) -> Option<f64> {
    let (s, n) = xs.into_iter().fold((0.0, 0usize), |(s, n), x| (s + x, n + 1));
    (n > 0).then(|| s / n as f64)
}

/// Stage-I environment: flat ground, clock observation, the run's reward scales.
pub fn stage1_env_config(cfg: &RunConfig, seed: u64) -> Result<EnvConfig> {
    let model = cfg.robot.model();
    let mut e = EnvConfig::stage1(model.clone(), cfg.num_envs, seed);
    e.reward_set = cfg.reward_mode_for(RunStage::I);
    e.rewards = cfg.reward_config(&model)?;
    e.terrain = TerrainMode::Flat;
    e.max_episode_steps = cfg.ppo.max_episode_steps;
    Ok(e)
}

/// Stage-II environment: curriculum terrain, randomized dynamics, pushes.
pub fn stage2_env_config(cfg: &RunConfig, seed: u64, mode: RewardSet, style_scale: Option<f64>) -> Result<EnvConfig> {
    let model = cfg.robot.model();
    let mut e = EnvConfig::stage2(model.clone(), cfg.num_envs, seed, mode);
    e.rewards = cfg.reward_config(&model)?;
    if let Some(s) = style_scale {
        e.rewards.set_scale(RewardTerm::DiscriminatorScore, s);
    }
    e.terrain = TerrainMode::Curriculum { seed, initial_level: cfg.terrain.initial_level };
    e.max_episode_steps = cfg.ppo.max_episode_steps;
    Ok(e)
}

pub fn stage1_policy(cfg: &RunConfig, env: &LocomotionEnv, rng: &mut ChaCha8Rng) -> Result<Stage1Policy> {
    let t = &cfg.networks;
    let actor = Mlp::new(t.stage1_actor(env.obs_dim(), env.action_dim()), 0.01, rng)?;
    let critic = Mlp::new(t.stage1_critic(env.obs_dim()), 1.0, rng)?;
    ActorCritic::new(actor, critic)
}

pub fn stage2_policy(cfg: &RunConfig, env: &LocomotionEnv, rng: &mut ChaCha8Rng) -> Result<Stage2Policy> {
    let m = &env.config().model;
    let actor = TeacherActor::new(&cfg.networks, obs::proprio_dim(m), obs::privileged_dim(m), m.action_dim(), rng)?;
    let critic = Mlp::new(cfg.networks.stage2_critic(env.obs_dim()), 1.0, rng)?;
    ActorCritic::new(actor, critic)
}

/// Per-iteration columns shared by both PPO stages.
fn rollout_columns(seed: u64, roll: &Rollout, stats: &UpdateStats, log_std: &[f64]) -> Map<String, Value> {
    let b = &roll.buffer;
    let per_term = |f: &dyn Fn(&crate::rewards::RewardBreakdown, RewardTerm) -> f64| -> Map<String, Value> {
        RewardTerm::ALL
            .iter()
            .map(|&t| (t.name().to_string(), json!(mean(b.breakdowns.iter().map(|x| f(x, t))).unwrap_or(0.0))))
            .collect()
    };
    let eps = &roll.episodes;
    let mut m = Map::new();
    m.insert("seed".into(), json!(seed));
    m.insert("mean_reward".into(), json!(mean(b.rewards.iter().copied()).unwrap_or(0.0)));
    m.insert("rewards".into(), Value::Object(per_term(&|x, t| x.scaled(t))));
    m.insert("raw_rewards".into(), Value::Object(per_term(&|x, t| x.raw(t))));
    m.insert("episodes".into(), json!(eps.len()));
    m.insert("terminations".into(), json!(eps.iter().filter(|e| e.terminated).count()));
    m.insert("mean_episode_length".into(), json!(mean(eps.iter().map(|e| e.length as f64))));
    m.insert("gait_adherence".into(), json!(mean(eps.iter().map(|e| e.gait_adherence))));
    m.insert("non_finite_resets".into(), json!(roll.non_finite_resets));
    m.insert("ppo".into(), serde_json::to_value(stats).expect("stats"));
    m.insert("action_std".into(), json!(mean(log_std.iter().map(|v| v.exp())).unwrap_or(0.0)));
    m
}

fn raw_mean(roll: &Rollout, term: RewardTerm) -> f64 {
    mean(roll.buffer.breakdowns.iter().map(|b| b.raw(term))).unwrap_or(0.0)
}

/// Deterministic Stage-I policy quality on a fresh flat-ground batch.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Stage1Eval {
    /// Mean raw linear-velocity tracking term.
    pub linear_tracking: f64,
    pub angular_tracking: f64,
    /// Fraction of env-steps whose contact agreement with the tripod schedule exceeds the threshold.
    pub gait_adherence: f64,
    pub falls: usize,
}

pub fn evaluate_stage1(policy: &Stage1Policy, cfg: &RunConfig, seed: u64) -> Result<Stage1Eval> {
    let mut env = LocomotionEnv::new(stage1_env_config(cfg, seed.wrapping_add(0x9e37_79b9))?)?;
    let n = env.num_envs();
    let (mut lin, mut ang, mut on_gait, mut count, mut falls) = (0.0, 0.0, 0usize, 0usize, 0usize);
    for _ in 0..STAGE1_EVAL_STEPS {
        let a = policy.mean(env.observe().view())?;
        let out = env.step(a.view(), &mut NoStyle)?;
        for (i, br) in out.breakdowns.iter().enumerate() {
            lin += br.raw(RewardTerm::LinearVelocityTracking);
            ang += br.raw(RewardTerm::AngularVelocityTracking);
            if !out.dones[i] {
                on_gait += (env.gait_agreement(i) > GAIT_AGREEMENT) as usize;
                count += 1;
            }
        }
        falls += out.finished.iter().filter(|e| e.terminated).count();
    }
    let steps = (STAGE1_EVAL_STEPS * n) as f64;
    Ok(Stage1Eval { linear_tracking: lin / steps, angular_tracking: ang / steps, gait_adherence: on_gait as f64 / count.max(1) as f64, falls })
}

/// PPO with gait rewards on flat ground, one policy per seed.
pub fn run_stage1(cfg: &RunConfig) -> Result<RunReport> {
    let mut log = prepare(cfg, RunStage::I, "train-stage1")?;
    let ppo = cfg.ppo_config();
    let mode = cfg.reward_mode_for(RunStage::I);
    let mut outcomes = Vec::new();
    for &seed in &cfg.seeds {
        let mut env = LocomotionEnv::new(stage1_env_config(cfg, seed)?)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut policy = stage1_policy(cfg, &env, &mut rng)?;
        let mut adam = Adam::new(&policy, ppo.learning_rate);
        let mut tracking = Vec::with_capacity(cfg.iterations);
        for it in 0..cfg.iterations {
            let (roll, stats) = ppo_iteration(&mut policy, &mut adam, &mut env, &mut NoStyle, &ppo, &mut rng)?;
            tracking.push(raw_mean(&roll, RewardTerm::LinearVelocityTracking));
            let mut rec = rollout_columns(seed, &roll, &stats, &policy.log_std_f64());
            rec.insert("reward_mode".into(), json!(mode));
            log.record("iteration", Some(it), rec)?;
        }
        let ckpt = cfg.paths.out.join(format!("stage1-seed{seed}.ckpt"));
        save_checkpoint(&policy, &ckpt)?;
        let eval = evaluate_stage1(&policy, cfg, seed)?;
        let tail = &tracking[tracking.len().saturating_sub(FINAL_WINDOW)..];
        let metrics: BTreeMap<String, f64> = [
            ("linear_tracking".to_string(), eval.linear_tracking),
            ("angular_tracking".to_string(), eval.angular_tracking),
            ("gait_adherence".to_string(), eval.gait_adherence),
            ("falls".to_string(), eval.falls as f64),
            ("train_linear_tracking".to_string(), mean(tail.iter().copied()).unwrap_or(0.0)),
        ]
        .into();
        log.record("summary", None, json!({"seed": seed, "reward_mode": mode, "checkpoint": ckpt, "eval": eval, "metrics": metrics}))?;
        outcomes.push(SeedOutcome { seed, reward_mode: mode, style_scale: None, artifact: Some(ckpt), metrics });
    }
    Ok(RunReport { log: log.path().to_path_buf(), outcomes })
}

fn load_stage1(cfg: &RunConfig, seed: u64) -> Result<Stage1Policy> {
    let env = LocomotionEnv::new(stage1_env_config(cfg, seed)?)?;
    let mut policy = stage1_policy(cfg, &env, &mut ChaCha8Rng::seed_from_u64(seed))?;
    load_checkpoint_into(&mut policy, cfg.paths.checkpoint.as_deref().expect("validated"))?;
    Ok(policy)
}

/// Drives a trained Stage-I policy through the basic command script and saves the dataset.
pub fn run_record(cfg: &RunConfig) -> Result<RunReport> {
    let mut log = prepare(cfg, RunStage::Record, "record-experience")?;
    let seed = cfg.seeds[0];
    let policy = load_stage1(cfg, seed)?;
    let env_cfg = stage1_env_config(cfg, seed)?;
    let joints = env_cfg.model.joint_count();
    let dataset = record_experience(env_cfg, &basic_script(), |o| policy.mean(o))?;
    let path = cfg.paths.dataset.clone().unwrap_or_else(|| cfg.paths.out.join("experience.bin"));
    dataset.save(&path)?;
    let metrics: BTreeMap<String, f64> = [
        ("states".to_string(), dataset.len() as f64),
        ("transitions".to_string(), dataset.transition_count() as f64),
        ("width".to_string(), dataset.width() as f64),
        ("duration".to_string(), dataset.duration()),
    ]
    .into();
    log.record("dataset", None, dataset_record(&dataset, &path, joints))?;
    Ok(RunReport { log: log.path().to_path_buf(), outcomes: vec![SeedOutcome { seed, reward_mode: cfg.reward_mode_for(RunStage::Record), style_scale: None, artifact: Some(path), metrics }] })
}

fn dataset_record(d: &ExperienceDataset, path: &Path, joints: usize) -> Value {
    let labels = amp_labels(joints);
    let columns: Vec<Value> = labels
        .iter()
        .enumerate()
        .map(|(j, l)| json!({"name": l, "mean": d.mean()[j] as f64, "std": d.std()[j] as f64}))
        .collect();
    json!({
        "path": path,
        "states": d.len(),
        "transitions": d.transition_count(),
        "width": d.width(),
        "rate": d.rate(),
        "duration": d.duration(),
        "columns": columns,
    })
}

/// Tracks the style reward range across a rollout.
fn style_columns(roll: &Rollout) -> Value {
    let r: Vec<f64> = roll.buffer.breakdowns.iter().map(|b| b.raw(RewardTerm::DiscriminatorScore)).collect();
    let min = r.iter().copied().fold(f64::INFINITY, f64::min);
    let max = r.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    json!({"mean": mean(r.iter().copied()), "min": min.is_finite().then_some(min), "max": max.is_finite().then_some(max)})
}

/// Curriculum PPO with optional discriminator, one policy per seed and style scale.
pub fn run_stage2(cfg: &RunConfig) -> Result<RunReport> {
    let mut log = prepare(cfg, RunStage::II, "train-stage2")?;
    let mode = cfg.reward_mode_for(RunStage::II);
    let model = cfg.robot.model();
    let dataset = match (mode.uses_style(), &cfg.paths.dataset) {
        (true, Some(p)) => {
            let d = ExperienceDataset::load(p)?;
            if d.width() != obs::amp_dim(&model) {
                return Err(Error::Config(format!("dataset width {} does not match the robot's motion state ({})", d.width(), obs::amp_dim(&model))));
            }
            Some(d)
        }
        _ => None,
    };
    let real = dataset.as_ref().map(|d| d.transitions());
    let scales: Vec<Option<f64>> = if mode.uses_style() { cfg.style_sweep().into_iter().map(Some).collect() } else { vec![None] };
    let ppo = cfg.ppo_config();
    let mut outcomes = Vec::new();
    for &seed in &cfg.seeds {
        for &scale in &scales {
            let mut env = LocomotionEnv::new(stage2_env_config(cfg, seed, mode, scale)?)?;
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut policy = stage2_policy(cfg, &env, &mut rng)?;
            let mut adam = Adam::new(&policy, ppo.learning_rate);
            let mut disc = match &dataset {
                Some(d) => {
                    let (m, s) = d.transition_stats();
                    Some(Discriminator::<f32>::new(cfg.networks.discriminator(d.width()), m, s, cfg.discriminator, &mut rng)?)
                }
                None => None,
            };
            let mut levels = Vec::with_capacity(cfg.iterations);
            for it in 0..cfg.iterations {
                let scorer: &mut dyn StyleScorer = match disc.as_mut() {
                    Some(d) => d,
                    None => &mut NoStyle,
                };
                let (roll, stats) = ppo_iteration(&mut policy, &mut adam, &mut env, scorer, &ppo, &mut rng)?;
                let mut rec = rollout_columns(seed, &roll, &stats, &policy.log_std_f64());
                if let (Some(d), Some(real)) = (disc.as_mut(), real.as_ref()) {
                    let fake = roll.buffer.amp_transitions.as_ref().ok_or_else(|| Error::InvalidArgument("rollout carries no motion transitions".into()))?;
                    let ds = d.train_step(real.view(), fake.view(), &mut rng)?;
                    rec.insert("discriminator".into(), serde_json::to_value(ds).expect("stats"));
                    rec.insert("style".into(), style_columns(&roll));
                }
                let curriculum = env.curriculum();
                let level = env.mean_terrain_level();
                levels.push(level);
                rec.insert("reward_mode".into(), json!(mode));
                rec.insert("style_scale".into(), json!(scale));
                rec.insert("terrain_level".into(), json!(level));
                rec.insert("level_histogram".into(), json!(level_histogram(&curriculum)));
                let by_type: BTreeMap<&str, f64> = TerrainType::ALL
                    .iter()
                    .map(|t| (t.name(), mean(curriculum.iter().filter(|c| c.terrain_type == *t).map(|c| c.level as f64)).unwrap_or(0.0)))
                    .collect();
                rec.insert("terrain_level_by_type".into(), json!(by_type));
                rec.insert("linear_tracking".into(), json!(raw_mean(&roll, RewardTerm::LinearVelocityTracking)));
                log.record("iteration", Some(it), rec)?;
            }
            let tag = match scale {
                Some(s) if !cfg.style_scales.is_empty() => format!("stage2-{}-x{s}-seed{seed}", mode_slug(mode)),
                _ => format!("stage2-{}-seed{seed}", mode_slug(mode)),
            };
            let ckpt = cfg.paths.out.join(format!("{tag}.ckpt"));
            save_checkpoint(&policy, &ckpt)?;
            if let Some(d) = &disc {
                save_checkpoint(d, &cfg.paths.out.join(format!("{tag}-disc.ckpt")))?;
            }
            let tail = &levels[levels.len().saturating_sub(FINAL_WINDOW)..];
            let metrics: BTreeMap<String, f64> = [
                ("final_terrain_level".to_string(), *levels.last().unwrap_or(&0.0)),
                ("tail_terrain_level".to_string(), mean(tail.iter().copied()).unwrap_or(0.0)),
            ]
            .into();
            log.record("summary", None, json!({"seed": seed, "reward_mode": mode, "style_scale": scale, "checkpoint": ckpt, "metrics": metrics}))?;
            outcomes.push(SeedOutcome { seed, reward_mode: mode, style_scale: scale, artifact: Some(ckpt), metrics });
        }
    }
    Ok(RunReport { log: log.path().to_path_buf(), outcomes })
}

/// Distillation and evaluation terrain: the Stage-II env without a style term.
fn teacher_env_config(cfg: &RunConfig, seed: u64) -> Result<EnvConfig> {
    stage2_env_config(cfg, seed, RewardSet::Basic, None)
}

fn load_teacher(cfg: &RunConfig, env: &LocomotionEnv, seed: u64) -> Result<TeacherActor<f32>> {
    let mut policy = stage2_policy(cfg, env, &mut ChaCha8Rng::seed_from_u64(seed))?;
    load_checkpoint_into(&mut policy, cfg.paths.checkpoint.as_deref().expect("validated"))?;
    Ok(policy.actor)
}

/// DAgger distillation of a Stage-II teacher into the recurrent student.
pub fn run_distill(cfg: &RunConfig) -> Result<RunReport> {
    let mut log = prepare(cfg, RunStage::Distill, "distill")?;
    let mut outcomes = Vec::new();
    for &seed in &cfg.seeds {
        let mut env = LocomotionEnv::new(teacher_env_config(cfg, seed)?)?;
        let teacher = load_teacher(cfg, &env, seed)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut student = init_student_from_teacher(&teacher, &cfg.networks, &mut rng)?;
        let mut adam = Adam::new(&student, cfg.distill.learning_rate);
        let mut collector = DaggerCollector::new(&student, env.num_envs());
        let mut last = BTreeMap::new();
        for it in 0..cfg.iterations {
            let batch = collector.collect(&student, &teacher, &mut env, cfg.distill.window)?;
            let loss = distill_update(&mut student, &mut adam, &batch, &cfg.distill)?;
            if let Some(l) = loss {
                last = [("imitation".to_string(), l.imitation), ("reconstruction".to_string(), l.reconstruction)].into();
            }
            log.record(
                "iteration",
                Some(it),
                json!({"seed": seed, "loss": loss, "skipped": loss.is_none(), "dropped_rows": batch.dropped, "terrain_level": env.mean_terrain_level()}),
            )?;
        }
        let ckpt = cfg.paths.out.join(format!("student-seed{seed}.ckpt"));
        save_checkpoint(&student, &ckpt)?;
        log.record("summary", None, json!({"seed": seed, "checkpoint": ckpt, "metrics": last}))?;
        outcomes.push(SeedOutcome { seed, reward_mode: RewardSet::Basic, style_scale: None, artifact: Some(ckpt), metrics: last });
    }
    Ok(RunReport { log: log.path().to_path_buf(), outcomes })
}

/// Sine velocity commands used for evaluation, body frame.
pub fn sine_command(t: f64) -> [f64; 3] {
    [0.5 * (TAU * t / 5.0).sin(), 0.25 * (TAU * t / 7.0).sin(), 0.5 * (TAU * t / 9.0).sin()]
}

enum EvalPolicy<'a> {
    Teacher(&'a TeacherActor<f32>),
    Student(&'a StudentPolicy<f32>),
}

impl EvalPolicy<'_> {
    fn name(&self) -> &'static str {
        match self {
            EvalPolicy::Teacher(_) => "teacher",
            EvalPolicy::Student(_) => "student",
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize)]
pub struct TrackingError {
    /// Mean `‖v_xy* − v_xy‖`, m/s.
    pub linear: f64,
    /// Mean `|ω_z* − ω_z|`, rad/s.
    pub angular: f64,
    pub falls: usize,
}

fn evaluate_on(policy: &EvalPolicy, env_cfg: EnvConfig, steps: usize, mut trace: Option<(&mut RunLog, &str)>) -> Result<TrackingError> {
    let mut env = LocomotionEnv::new(env_cfg)?;
    let n = env.num_envs();
    let dt = env.config().sim.control_dt;
    let mut memory = match policy {
        EvalPolicy::Student(s) => Some(s.initial_state(n)),
        EvalPolicy::Teacher(_) => None,
    };
    let mut err = TrackingError::default();
    for k in 0..steps {
        let command = sine_command(k as f64 * dt);
        for i in 0..n {
            env.set_command(i, Some(command));
        }
        let actions: Array2<f64> = match policy {
            EvalPolicy::Teacher(t) => t.label(env.observe().view())?.0,
            EvalPolicy::Student(s) => {
                let state = memory.take().expect("student memory");
                let (a, _, next) = s.step(env.observe_proprio().view(), &state)?;
                memory = Some(next);
                a
            }
        };
        let out = env.step(actions.view(), &mut NoStyle)?;
        if let Some(m) = memory.as_mut() {
            m.reset_rows(&out.dones);
        }
        for i in 0..n {
            let s = env.state(i);
            let v = s.body_linear_velocity();
            let w = s.body_angular_velocity();
            err.linear += ((command[0] - v.x).powi(2) + (command[1] - v.y).powi(2)).sqrt();
            err.angular += (command[2] - w.z).abs();
        }
        err.falls += out.finished.iter().filter(|e| e.terminated).count();
        if let Some((log, terrain)) = trace.as_mut() {
            let s = env.state(0);
            let v = s.body_linear_velocity();
            let w = s.body_angular_velocity();
            let forces: Vec<f64> = s.foot_contact_forces.iter().map(|f| f.norm()).collect();
            log.record(
                "trace",
                Some(k),
                json!({"policy": policy.name(), "terrain": terrain, "time": s.time, "command": command, "velocity": [v.x, v.y, w.z], "foot_forces": forces}),
            )?;
        }
    }
    let total = (steps * n).max(1) as f64;
    err.linear /= total;
    err.angular /= total;
    Ok(err)
}

/// Teacher and (optionally) student tracking error per terrain type under sine commands.
pub fn run_eval(cfg: &RunConfig) -> Result<RunReport> {
    let mut log = prepare(cfg, RunStage::Eval, "eval")?;
    let mut outcomes = Vec::new();
    for &seed in &cfg.seeds {
        let probe = LocomotionEnv::new(teacher_env_config(cfg, seed)?)?;
        let teacher = load_teacher(cfg, &probe, seed)?;
        let student = match &cfg.paths.student {
            Some(p) => {
                let mut s = init_student_from_teacher(&teacher, &cfg.networks, &mut ChaCha8Rng::seed_from_u64(seed))?;
                load_checkpoint_into(&mut s, p)?;
                Some(s)
            }
            None => None,
        };
        let mut policies = vec![EvalPolicy::Teacher(&teacher)];
        if let Some(s) = &student {
            policies.push(EvalPolicy::Student(s));
        }
        let mut metrics = BTreeMap::new();
        for &terrain in &cfg.eval.terrains {
            let mut env_cfg = teacher_env_config(cfg, seed)?;
            env_cfg.terrain = TerrainMode::Fixed { seed, terrain_type: terrain, level: cfg.eval.level };
            env_cfg.randomization = None;
            env_cfg.push = PushConfig::disabled();
            env_cfg.max_episode_steps = env_cfg.max_episode_steps.max(cfg.eval.steps + 1);
            for p in &policies {
                let traced = cfg.eval.trace_terrain == Some(terrain);
                let trace = traced.then_some((&mut log, terrain.name()));
                let e = evaluate_on(p, env_cfg.clone(), cfg.eval.steps, trace)?;
                metrics.insert(format!("{}.{}.linear_error", p.name(), terrain.name()), e.linear);
                log.record("eval", None, json!({"seed": seed, "policy": p.name(), "terrain": terrain, "level": cfg.eval.level, "steps": cfg.eval.steps, "error": e}))?;
            }
        }
        outcomes.push(SeedOutcome { seed, reward_mode: RewardSet::Basic, style_scale: None, artifact: None, metrics });
    }
    Ok(RunReport { log: log.path().to_path_buf(), outcomes })
}

/// Prints a dataset summary and logs its per-column statistics.
pub fn run_inspect(cfg: &RunConfig) -> Result<(RunReport, String)> {
    let mut log = prepare(cfg, RunStage::Inspect, "inspect-dataset")?;
    let path = cfg.paths.dataset.clone().expect("validated");
    let d = ExperienceDataset::load(&path)?;
    let joints = cfg.robot.model().joint_count();
    let labels = (d.width() == amp_labels(joints).len()).then(|| amp_labels(joints));
    let text = d.summary(labels.as_deref());
    log.record("dataset", None, dataset_record_loose(&d, &path, labels.as_deref()))?;
    Ok((RunReport { log: log.path().to_path_buf(), outcomes: Vec::new() }, text))
}

fn dataset_record_loose(d: &ExperienceDataset, path: &Path, labels: Option<&[String]>) -> Value {
    let columns: Vec<Value> = (0..d.width())
        .map(|j| {
            let name = labels.map(|l| l[j].clone()).unwrap_or_else(|| format!("x{j}"));
            json!({"name": name, "mean": d.mean()[j] as f64, "std": d.std()[j] as f64})
        })
        .collect();
    json!({"path": path, "states": d.len(), "transitions": d.transition_count(), "width": d.width(), "rate": d.rate(), "duration": d.duration(), "columns": columns})
}

/// Renders every chart the log supports into `<out>/plots`.
pub fn run_plot(cfg: &RunConfig) -> Result<RunReport> {
    let mut log = prepare(cfg, RunStage::Plot, "plot")?;
    let src = cfg.paths.log.clone().expect("validated");
    let (records, skipped) = read_log(&src)?;
    let dir = cfg.paths.out.join("plots");
    let files = emit_plots(&records, &dir)?;
    for f in &files {
        log.record("plot", None, json!({"file": f.path, "chart": f.chart, "series": f.series, "points": f.points}))?;
    }
    log.record("summary", None, json!({"source": src, "records": records.len(), "skipped_lines": skipped, "files": files.len()}))?;
    let metrics = [("skipped_lines".to_string(), skipped as f64), ("files".to_string(), files.len() as f64)].into();
    Ok(RunReport { log: log.path().to_path_buf(), outcomes: vec![SeedOutcome { seed: 0, reward_mode: RewardSet::Basic, style_scale: None, artifact: Some(dir), metrics }] })
}
