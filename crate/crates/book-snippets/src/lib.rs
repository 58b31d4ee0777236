//! The guide in `book/` is plain mdbook, which cannot run snippets that
//! depend on workspace crates. Each chapter is included here as the docs of
//! an empty module instead, so `cargo test` compiles and runs every code
//! block as a doctest. A failing doctest names its module, which names the
//! chapter.

#[doc = include_str!("../../../book/src/introduction.md")]
pub mod introduction {}
#[doc = include_str!("../../../book/src/model.md")]
pub mod model {}
#[doc = include_str!("../../../book/src/stationary.md")]
pub mod stationary {}
#[doc = include_str!("../../../book/src/cycles.md")]
pub mod cycles {}
#[doc = include_str!("../../../book/src/variational.md")]
pub mod variational {}
#[doc = include_str!("../../../book/src/first-passage.md")]
pub mod first_passage {}
#[doc = include_str!("../../../book/src/tails.md")]
pub mod tails {}
#[doc = include_str!("../../../book/src/cli.md")]
pub mod cli {}
