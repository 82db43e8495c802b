"""RIS-assisted ISAC simulator.

Builds mixed near-field/far-field channels for an AP + RIS + IIoT device
scenario, evaluates uplink NOMA SINRs and the closed-form time-delay CRB,
and minimizes that CRB by alternating optimization over receive
beamforming (SDR), bandwidth splitting (grid search) and RIS phase
shifts (SDR).
"""

__version__ = "0.1.0"
