export {
	AgainError,
	BusyError,
	ClosedError,
	DeviceStatusError,
	InvalidArgumentError,
	IoError,
	NoDeviceError,
	NoMemoryError,
	NotFoundError,
	NotSupportedError,
	TransportError,
	UsageError,
	errorFromStderr,
} from "./errors.js";
export type { ErrorClass, StatusClass } from "./errors.js";
export { runXio, runXioJson, xioBinary } from "./cli.js";
export type { CliResult } from "./cli.js";
export {
	Device,
	enumerateDevices,
	openHandleCount,
	withDevice,
} from "./device.js";
export type { BenchOptions, BenchReport, DeviceOptions } from "./device.js";
export { Queue, openQueueCount } from "./queue.js";
export type { QueueCompletion, QueueOp } from "./queue.js";
export {
	IDENTIFY_MIN_NBYTES,
	ZONE_RECORD_NBYTES,
	decodeIdentify,
	decodeZoneReport,
	encodeIdentify,
	encodeZoneReport,
} from "./wire.js";
export type {
	Geometry,
	GeometryKind,
	ZoneRecord,
	ZoneReport,
	ZoneStateName,
} from "./wire.js";

export const VERSION = "0.1.0";
