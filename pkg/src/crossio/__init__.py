"""crossio: one command-centric API over interchangeable storage backends.

A device handle, aligned payload buffers, and a queue of command
contexts form the whole programming model; commands run synchronously
straight at the device or asynchronously via the queue, over whichever
backend the identifier and options resolve to. A deterministic
in-memory NVMe emulator (conventional and zoned) is always available
as the reference backend.
"""

from ._kernels import kernel_backend
from .bench import BenchReport, LatencyHistogram, run_bench
from .cmdqueue import CommandContext, Queue, cmd_pass, queue_init
from .cmdsets import (
    ReportedZone,
    StatusClass,
    StatusInfo,
    build_flush,
    build_identify,
    build_read,
    build_write,
    build_zone_append,
    build_zone_report,
    build_zone_reset,
    decode_status,
    decode_zone_report,
    zone_report_nbytes,
)
from .core import (
    AdminOpcode,
    AgainError,
    BusyError,
    Command,
    Completion,
    ErrorCode,
    Geometry,
    GeometryKind,
    InvalidError,
    IoError,
    NoDeviceError,
    NoMemoryError,
    NotFoundError,
    NotSupportedError,
    NvmOpcode,
    Status,
    TransportError,
    geometry_from_identify,
    geometry_to_identify,
    options_default,
    options_parse,
    options_render,
    status_is_error,
)
from .device import (
    Buffer,
    Device,
    DeviceIdent,
    dev_open,
    enumerate_devices,
    handle_counts,
)
from .ramdev import (
    FaultRule,
    LatencyRule,
    RamNamespace,
    ZoneState,
    ram_create,
    ram_destroy,
    ram_get,
    ram_list,
)

__version__ = "0.1.0"
