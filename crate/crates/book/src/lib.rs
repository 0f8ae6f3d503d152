//! Runs the code listings of the guide in `book/` as doc-tests.

#[doc = include_str!("../../../book/src/introduction.md")]
pub mod introduction {}

#[doc = include_str!("../../../book/src/tempering.md")]
pub mod tempering {}

#[doc = include_str!("../../../book/src/fisher.md")]
pub mod fisher {}

#[doc = include_str!("../../../book/src/smc.md")]
pub mod smc {}

#[doc = include_str!("../../../book/src/kde.md")]
pub mod kde {}

#[doc = include_str!("../../../book/src/cli.md")]
pub mod cli {}
