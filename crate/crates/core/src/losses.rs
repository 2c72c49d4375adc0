//! Classification and distillation losses.
//!
//! Everything here runs in `f64`. Softmax uses max-subtraction, and the
//! cross-entropy / KL paths go through log-sum-exp, so logits up to 1e4
//! in magnitude are safe.

use crate::error::{Error, Result};

/// What a block of logits scores. Purely informational; the math below
/// only cares about the values.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum LogitKind {
    /// City-class scores from the stage-1 model.
    City,
    /// Scene scores from a scene model (baseline or student).
    Scene,
    /// Scene scores produced by a scene head on frozen city features.
    CityToScene,
    /// Ensemble-averaged city-to-scene scores.
    EnsembleCityToScene,
}

/// A batch of raw class scores, row-major `[batch, n_classes]`.
#[derive(Debug, Clone)]
pub struct Logits {
    pub values: Vec<f64>,
    pub n_classes: usize,
    pub kind: LogitKind,
}

impl Logits {
    pub fn new(values: Vec<f64>, n_classes: usize, kind: LogitKind) -> Result<Self> {
        if n_classes == 0 || !values.len().is_multiple_of(n_classes) {
            return Err(Error::Shape(format!(
                "logit buffer of {} values is not a multiple of {} classes",
                values.len(),
                n_classes
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("logits"));
        }
        Ok(Self {
            values,
            n_classes,
            kind,
        })
    }

    pub fn batch_len(&self) -> usize {
        self.values.len() / self.n_classes
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.n_classes..(i + 1) * self.n_classes]
    }
}

/// Which distribution is the KL reference in the distillation loss.
///
/// `TeacherReference` is KL(teacher || student): the conventional
/// distillation direction, where gradients push the student toward the
/// fixed teacher distribution. `StudentReference` is the literal
/// KL(student || teacher) reading.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KlDirection {
    #[default]
    TeacherReference,
    StudentReference,
}

/// Distillation hyperparameters: softening temperature and the convex
/// weight between the label loss and the distillation loss.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct KdConfig {
    #[serde(default = "default_temperature")]
    pub temperature: f64,
    #[serde(default = "default_lambda")]
    pub lambda: f64,
    #[serde(default)]
    pub kl_direction: KlDirection,
}

fn default_temperature() -> f64 {
    2.0
}

fn default_lambda() -> f64 {
    0.5
}

impl Default for KdConfig {
    fn default() -> Self {
        Self {
            temperature: 2.0,
            lambda: 0.5,
            kl_direction: KlDirection::default(),
        }
    }
}

impl KdConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.temperature > 0.0) || !self.temperature.is_finite() {
            return Err(Error::Config(format!(
                "kd.temperature must be positive, got {}",
                self.temperature
            )));
        }
        if !(0.0..=1.0).contains(&self.lambda) {
            return Err(Error::Config(format!(
                "kd.lambda must be in [0, 1], got {}",
                self.lambda
            )));
        }
        Ok(())
    }
}

/// Target for a cross-entropy term: either a hard class index or a soft
/// distribution over the vocabulary.
#[derive(Debug, Clone, Copy)]
pub enum Target<'a> {
    Index(usize),
    Soft(&'a [f64]),
}

/// Temperature-scaled softmax of one logit row.
pub fn softmax(z: &[f64], temperature: f64) -> Result<Vec<f64>> {
    if !(temperature > 0.0) {
        return Err(Error::Config(format!(
            "softmax temperature must be positive, got {temperature}"
        )));
    }
    if z.is_empty() {
        return Err(Error::Shape("softmax of empty logit row".into()));
    }
    if z.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("softmax input"));
    }
    let max = z.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mut out: Vec<f64> = z.iter().map(|&v| ((v - max) / temperature).exp()).collect();
    let sum: f64 = out.iter().sum();
    for v in &mut out {
        *v /= sum;
    }
    Ok(out)
}

/// log(softmax(z / temperature)), stable for large logits.
fn log_softmax(z: &[f64], temperature: f64) -> Vec<f64> {
    let max = z.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let lse: f64 = z
        .iter()
        .map(|&v| ((v - max) / temperature).exp())
        .sum::<f64>()
        .ln();
    z.iter().map(|&v| (v - max) / temperature - lse).collect()
}

/// Cross-entropy of one logit row against a hard or soft target.
pub fn cross_entropy(z: &[f64], target: Target<'_>) -> Result<f64> {
    if z.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("cross_entropy logits"));
    }
    let logp = log_softmax(z, 1.0);
    match target {
        Target::Index(i) => {
            if i >= z.len() {
                return Err(Error::Shape(format!(
                    "target index {i} out of range for {} classes",
                    z.len()
                )));
            }
            Ok(-logp[i])
        }
        Target::Soft(t) => {
            if t.len() != z.len() {
                return Err(Error::Shape(format!(
                    "soft target has {} entries, logits have {}",
                    t.len(),
                    z.len()
                )));
            }
            Ok(-t.iter().zip(&logp).map(|(&ti, &lp)| ti * lp).sum::<f64>())
        }
    }
}

/// Mean cross-entropy over a batch of soft targets (`[batch, k]` row-major).
pub fn cross_entropy_batch(z: &[f64], targets: &[f64], k: usize) -> Result<f64> {
    if z.len() != targets.len() || k == 0 || !z.len().is_multiple_of(k) {
        return Err(Error::Shape(format!(
            "cross_entropy_batch: {} logits vs {} targets with k={k}",
            z.len(),
            targets.len()
        )));
    }
    let b = z.len() / k;
    let mut total = 0.0;
    for i in 0..b {
        total += cross_entropy(&z[i * k..(i + 1) * k], Target::Soft(&targets[i * k..(i + 1) * k]))?;
    }
    Ok(total / b as f64)
}

/// Temperature-scaled distillation loss for one instance:
/// `tau^2 * KL(reference || other)` on the softened distributions.
pub fn kd_loss(student_z: &[f64], teacher_z: &[f64], tau: f64) -> Result<f64> {
    kd_loss_directed(student_z, teacher_z, tau, KlDirection::TeacherReference)
}

/// As [`kd_loss`], with an explicit KL direction.
pub fn kd_loss_directed(
    student_z: &[f64],
    teacher_z: &[f64],
    tau: f64,
    direction: KlDirection,
) -> Result<f64> {
    if student_z.len() != teacher_z.len() {
        return Err(Error::Shape(format!(
            "kd_loss: student has {} classes, teacher has {}",
            student_z.len(),
            teacher_z.len()
        )));
    }
    if !(tau > 0.0) {
        return Err(Error::Config(format!("kd temperature must be positive, got {tau}")));
    }
    let log_p = log_softmax(student_z, tau);
    let log_q = log_softmax(teacher_z, tau);
    let kl = match direction {
        // KL(q || p) with q = softened teacher.
        KlDirection::TeacherReference => log_q
            .iter()
            .zip(&log_p)
            .map(|(&lq, &lp)| {
                let q = lq.exp();
                q * (lq - lp)
            })
            .sum::<f64>(),
        // KL(p || q) with p = softened student.
        KlDirection::StudentReference => log_p
            .iter()
            .zip(&log_q)
            .map(|(&lp, &lq)| {
                let p = lp.exp();
                p * (lp - lq)
            })
            .sum::<f64>(),
    };
    Ok(tau * tau * kl)
}

/// Mean distillation loss over a batch (`[batch, k]` row-major).
pub fn kd_loss_batch(
    student_z: &[f64],
    teacher_z: &[f64],
    k: usize,
    tau: f64,
    direction: KlDirection,
) -> Result<f64> {
    if student_z.len() != teacher_z.len() || k == 0 || !student_z.len().is_multiple_of(k) {
        return Err(Error::Shape(format!(
            "kd_loss_batch: {} student vs {} teacher logits with k={k}",
            student_z.len(),
            teacher_z.len()
        )));
    }
    let b = student_z.len() / k;
    let mut total = 0.0;
    for i in 0..b {
        total += kd_loss_directed(
            &student_z[i * k..(i + 1) * k],
            &teacher_z[i * k..(i + 1) * k],
            tau,
            direction,
        )?;
    }
    Ok(total / b as f64)
}

/// The stage-3 objective: `lambda * scene_loss + (1 - lambda) * kd`.
pub fn combined_loss(scene_loss: f64, kd: f64, lambda: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&lambda) {
        return Err(Error::Config(format!("lambda must be in [0, 1], got {lambda}")));
    }
    Ok(lambda * scene_loss + (1.0 - lambda) * kd)
}

/// Element-wise mean of the teachers' logits.
///
/// Computed as `z_0 + mean(z_i - z_0)`: algebraically the mean, and
/// exactly `z_0` when every teacher agrees bit-for-bit, which keeps an
/// ensemble of identical teachers equivalent to the single teacher.
pub fn ensemble_logits(teacher_logits: &[Logits]) -> Result<Logits> {
    let first = teacher_logits.first().ok_or(Error::NoTeachers)?;
    let k = first.n_classes;
    let len = first.values.len();
    for (i, t) in teacher_logits.iter().enumerate() {
        if t.n_classes != k || t.values.len() != len {
            return Err(Error::Shape(format!(
                "ensemble teacher {i} has shape {}x{}, expected {}x{k}",
                t.batch_len(),
                t.n_classes,
                len / k
            )));
        }
    }
    let n = teacher_logits.len() as f64;
    let mut out = first.values.clone();
    for (j, o) in out.iter_mut().enumerate() {
        let mut dev = 0.0;
        for t in &teacher_logits[1..] {
            dev += t.values[j] - first.values[j];
        }
        *o += dev / n;
    }
    Logits::new(out, k, LogitKind::EnsembleCityToScene)
}

/// Gradient of the combined objective with respect to the student logits
/// of one instance. `teacher_z = None` drops the distillation term (the
/// baseline objective).
pub fn combined_grad(
    student_z: &[f64],
    teacher_z: Option<&[f64]>,
    target: Target<'_>,
    lambda: f64,
    tau: f64,
    direction: KlDirection,
) -> Result<Vec<f64>> {
    if !(0.0..=1.0).contains(&lambda) {
        return Err(Error::Config(format!("lambda must be in [0, 1], got {lambda}")));
    }
    let k = student_z.len();
    let p = softmax(student_z, 1.0)?;
    let mut grad: Vec<f64> = match target {
        Target::Index(i) => {
            if i >= k {
                return Err(Error::Shape(format!("target index {i} out of range for {k} classes")));
            }
            let mut g = p.clone();
            g[i] -= 1.0;
            g
        }
        Target::Soft(t) => {
            if t.len() != k {
                return Err(Error::Shape(format!(
                    "soft target has {} entries, logits have {k}",
                    t.len()
                )));
            }
            p.iter().zip(t).map(|(&pi, &ti)| pi - ti).collect()
        }
    };
    for g in &mut grad {
        *g *= lambda;
    }
    let kd_weight = 1.0 - lambda;
    if let Some(tz) = teacher_z {
        if kd_weight != 0.0 {
            if tz.len() != k {
                return Err(Error::Shape(format!(
                    "teacher has {} classes, student has {k}",
                    tz.len()
                )));
            }
            let log_ps = log_softmax(student_z, tau);
            let log_qs = log_softmax(tz, tau);
            match direction {
                KlDirection::TeacherReference => {
                    // d/dz tau^2 KL(q || p(z)) = tau * (p - q)
                    for j in 0..k {
                        grad[j] += kd_weight * tau * (log_ps[j].exp() - log_qs[j].exp());
                    }
                }
                KlDirection::StudentReference => {
                    // d/dz tau^2 KL(p(z) || q) = tau * p * (log p - log q - KL)
                    let kl: f64 = log_ps
                        .iter()
                        .zip(&log_qs)
                        .map(|(&lp, &lq)| lp.exp() * (lp - lq))
                        .sum();
                    for j in 0..k {
                        let pj = log_ps[j].exp();
                        grad[j] += kd_weight * tau * pj * (log_ps[j] - log_qs[j] - kl);
                    }
                }
            }
        }
    }
    Ok(grad)
}
