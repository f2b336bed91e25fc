"""Quantum Concept Music toolkit.

Subpackages:

* ``qcm.zx``     -- open ZX diagrams, fusion, pure/doubled evaluation
* ``qcm.sim``    -- seeded statevector simulation and Bell statistics
* ``qcm.model``  -- score abstract syntax, validation, diagram compilation
* ``qcm.lang``   -- the .qcm textual score format (parser + serializer)
* ``qcm.engine`` -- live performance sessions with replayable event logs
* ``qcm.service``-- session host speaking the documented wire protocol
* ``qcm.cli``    -- the qcm command line tool
"""

__version__ = "0.1.0"
