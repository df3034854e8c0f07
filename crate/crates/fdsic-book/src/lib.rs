//! Doc-test shim for the guide in `book/`.
//!
//! Each module below inlines one chapter verbatim, so `cargo test --doc -p
//! fdsic-book` compiles and runs every ```rust snippet the book shows. A
//! snippet that drifts from the library's API fails the build; a snippet
//! whose claims stop holding fails its assertions. The rendered book and the
//! tested code are the same bytes.

#[doc = include_str!("../../../book/src/introduction.md")]
pub mod introduction {}

#[doc = include_str!("../../../book/src/signals.md")]
pub mod signals {}

#[doc = include_str!("../../../book/src/channel.md")]
pub mod channel {}

#[doc = include_str!("../../../book/src/frontend.md")]
pub mod frontend {}

#[doc = include_str!("../../../book/src/estimator.md")]
pub mod estimator {}

#[doc = include_str!("../../../book/src/adaptive-order.md")]
pub mod adaptive_order {}

#[doc = include_str!("../../../book/src/metrics.md")]
pub mod metrics {}

#[doc = include_str!("../../../book/src/harness.md")]
pub mod harness {}
