#pragma once
static inline int core_lib_clamp(int v, int lo, int hi) { return v < lo ? lo : (v > hi ? hi : v); }
