# dostbc/__init__.py — distributed orthogonal space-time block codes for two-hop relay networks
__version__ = "0.3.0"

from .code_core import (  # noqa: E402
    AssociatedPair,
    CodeFormatError,
    DistributedCode,
    MonoCoeff,
    UnsupportedSizeError,
    construct,
    construct_alamouti,
    construct_paired_alamouti,
    construct_rate_halving,
    construct_repetition,
    parse_code,
    render_code_matrix,
    serialize_code,
)
from .verify import (  # noqa: E402
    ChannelMismatchError,
    VerificationReport,
    check_dostbc,
    check_dostbc_cpi,
    check_gram_conditions,
    is_column_monomial,
    is_row_monomial,
    noise_covariance,
)
from .bounds import (  # noqa: E402
    BoundViolationError,
    PartitionPremiseError,
    block_rate_check,
    cpi_rate_bound,
    dostbc_rate_bound,
    partition,
)
