//! Every chapter of the book is attached to a module here so that
//! `cargo test --doc -p growthlab-guide` runs its listings against the
//! current library.

#[doc = include_str!("../../../book/src/introduction.md")]
pub mod introduction {}
#[doc = include_str!("../../../book/src/growth-rates.md")]
pub mod growth_rates {}
#[doc = include_str!("../../../book/src/classical.md")]
pub mod classical {}
#[doc = include_str!("../../../book/src/quantum.md")]
pub mod quantum {}
#[doc = include_str!("../../../book/src/representations.md")]
pub mod representations {}
#[doc = include_str!("../../../book/src/scenarios.md")]
pub mod scenarios {}
