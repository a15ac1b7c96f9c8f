//! A tagged union over every model type, for code that picks the class at
//! run time (file loading, the command line, random generation).

use crate::controlled::{ControlledModel, IoHqmm, Pomdp, Qomdp};
use crate::error::{Error, Result};
use crate::evaluate::{Filter, Joint, SequenceModel};
use crate::models::{
    Hmm, Hqmm, ModelKind, MpsChain, Noom, OperatorModel, Psr, Ubm, Ulps, Umps, Validate,
    ValidateOptions, ValidationReport,
};
use crate::scalar::Real;

#[derive(Clone, Debug, PartialEq)]
pub enum AnyModel<T: Real = f64> {
    Umps(Umps<T>),
    MpsChain(MpsChain<T>),
    Psr(Psr<T>),
    Hmm(Hmm<T>),
    Ubm(Ubm<T>),
    Noom(Noom<T>),
    Hqmm(Hqmm<T>),
    Ulps(Ulps<T>),
    Pomdp(Pomdp<T>),
    IoHqmm(IoHqmm<T>),
    Qomdp(Qomdp<T>),
}

macro_rules! each_uncontrolled {
    ($self:expr, $m:ident => $body:expr, $c:ident => $ctrl:expr) => {
        match $self {
            AnyModel::Umps($m) => $body,
            AnyModel::MpsChain($m) => $body,
            AnyModel::Psr($m) => $body,
            AnyModel::Hmm($m) => $body,
            AnyModel::Ubm($m) => $body,
            AnyModel::Noom($m) => $body,
            AnyModel::Hqmm($m) => $body,
            AnyModel::Ulps($m) => $body,
            AnyModel::Pomdp($c) => $ctrl,
            AnyModel::IoHqmm($c) => $ctrl,
            AnyModel::Qomdp($c) => $ctrl,
        }
    };
}

impl<T: Real> AnyModel<T> {
    pub fn kind(&self) -> ModelKind {
        match self {
            AnyModel::Umps(_) => ModelKind::Umps,
            AnyModel::MpsChain(_) => ModelKind::MpsChain,
            AnyModel::Psr(_) => ModelKind::Psr,
            AnyModel::Hmm(_) => ModelKind::Hmm,
            AnyModel::Ubm(_) => ModelKind::Ubm,
            AnyModel::Noom(_) => ModelKind::Noom,
            AnyModel::Hqmm(_) => ModelKind::Hqmm,
            AnyModel::Ulps(_) => ModelKind::Ulps,
            AnyModel::Pomdp(_) => ModelKind::Pomdp,
            AnyModel::IoHqmm(_) => ModelKind::IoHqmm,
            AnyModel::Qomdp(_) => ModelKind::Qomdp,
        }
    }

    pub fn obs_count(&self) -> usize {
        each_uncontrolled!(self, m => SequenceModel::obs_count(m), c => ControlledModel::obs_count(c))
    }

    /// Number of actions for controlled models.
    pub fn action_count(&self) -> Option<usize> {
        each_uncontrolled!(self, _m => None, c => Some(c.action_count()))
    }

    pub fn is_controlled(&self) -> bool {
        self.action_count().is_some()
    }

    /// Linear operator view; `None` for chains and controlled models.
    pub fn as_operator(&self) -> Option<&(dyn OperatorModel<T> + Sync)> {
        match self {
            AnyModel::Umps(m) => Some(m),
            AnyModel::Psr(m) => Some(m),
            AnyModel::Hmm(m) => Some(m),
            AnyModel::Ubm(m) => Some(m),
            AnyModel::Noom(m) => Some(m),
            AnyModel::Hqmm(m) => Some(m),
            AnyModel::Ulps(m) => Some(m),
            _ => None,
        }
    }

    /// Normalized filtering; only the classes whose states are
    /// probability-normalized support it.
    pub fn as_filter(&self) -> Option<&(dyn Filter<T> + Sync)> {
        match self {
            AnyModel::Psr(m) => Some(m),
            AnyModel::Hmm(m) => Some(m),
            AnyModel::Noom(m) => Some(m),
            AnyModel::Hqmm(m) => Some(m),
            _ => None,
        }
    }

    pub fn as_controlled(&self) -> Option<&dyn ControlledModel<T>> {
        match self {
            AnyModel::Pomdp(c) => Some(c),
            AnyModel::IoHqmm(c) => Some(c),
            AnyModel::Qomdp(c) => Some(c),
            _ => None,
        }
    }
}

impl<T: Real> Validate<T> for AnyModel<T> {
    fn validate_with(&self, opts: &ValidateOptions<T>) -> ValidationReport<T> {
        each_uncontrolled!(self, m => m.validate_with(opts), c => c.validate_with(opts))
    }
}

impl<T: Real> SequenceModel<T> for AnyModel<T> {
    fn kind(&self) -> ModelKind {
        AnyModel::kind(self)
    }

    fn obs_count(&self) -> usize {
        AnyModel::obs_count(self)
    }

    fn joint(&self, seq: &[usize]) -> Result<Joint<T>> {
        each_uncontrolled!(self, m => m.joint(seq), _c => Err(Error::InvalidParameter(format!(
            "{} needs an action-observation sequence",
            self.kind()
        ))))
    }
}

macro_rules! from_variant {
    ($($ty:ident),*) => {$(
        impl<T: Real> From<$ty<T>> for AnyModel<T> {
            fn from(m: $ty<T>) -> Self {
                AnyModel::$ty(m)
            }
        }
    )*};
}

from_variant!(Umps, MpsChain, Psr, Hmm, Ubm, Noom, Hqmm, Ulps, Pomdp, IoHqmm, Qomdp);
