"""Joint reflection and schedule optimization for wireless powered networks.

A passive reconfigurable surface assists both the downlink charging of
devices and their uplink transmissions; this package maximizes weighted sum
throughput over the surface's phase-shift vectors and the harvest-then-
transmit time/energy allocation. See the scheme solvers in
`irs_wpcn.optimizers`, the certified upper bound in `irs_wpcn.sdr`, and the
sweep/CLI front ends in `irs_wpcn.experiments` and `irs_wpcn.cli`.
"""
