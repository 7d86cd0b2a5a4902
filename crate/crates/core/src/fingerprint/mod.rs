//! Fingerprint states, the one-way protocols they induce, and the one-way
//! QMA interface consumed by the path conversion.

mod bits;
mod oneway;
mod qma;
mod scheme;

pub use bits::{BitString, BooleanFunction};
pub use oneway::{eq_one_way, exact_send_protocol, majority_repeat, OneWayProtocol};
pub use qma::{wrap_oneway_as_qma, OneWayQmaProtocol};
pub use scheme::{fingerprint_state, FingerprintScheme, SchemeKind};
