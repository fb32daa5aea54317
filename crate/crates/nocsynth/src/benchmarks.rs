// SPDX-License-Identifier: Apache-2.0

//! Communication graphs shipped with the tool. See each file's header for
//! where its numbers come from.

use nocsynth_core::CoreCommGraph;

use crate::format::parse_ccg;

pub const BUNDLED: [(&str, &str); 7] = [
    ("mpeg4", include_str!("../benchmarks/mpeg4.ccg")),
    ("mwd", include_str!("../benchmarks/mwd.ccg")),
    ("vopd", include_str!("../benchmarks/vopd.ccg")),
    ("263decmp3dec", include_str!("../benchmarks/263decmp3dec.ccg")),
    ("263encmp3dec", include_str!("../benchmarks/263encmp3dec.ccg")),
    ("mp3encmp3dec", include_str!("../benchmarks/mp3encmp3dec.ccg")),
    ("d38_tvopd", include_str!("../benchmarks/d38_tvopd.ccg")),
];

pub fn load(name: &str) -> Option<CoreCommGraph> {
    BUNDLED.iter().find(|(n, _)| *n == name).map(|(_, text)| parse_ccg(text).expect("bundled graphs parse"))
}
