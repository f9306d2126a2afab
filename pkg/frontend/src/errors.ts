/**
 * Error hierarchy mirroring the library's two failure channels.
 *
 * Submission-path failures arrive as one subclass per error class
 * (parsed from the CLI's `error[CLASS]` diagnostics); device-reported
 * failures arrive as DeviceStatusError carrying the decoded status
 * class. The two never alias.
 */

export type ErrorClass =
	| "INVAL"
	| "NOENT"
	| "NODEV"
	| "BUSY"
	| "AGAIN"
	| "IO"
	| "NOSYS"
	| "NOMEM";

export type StatusClass = "media" | "range" | "zone" | "generic";

export class IoError extends Error {
	public readonly code: ErrorClass;

	constructor(code: ErrorClass, message: string) {
		super(message);
		this.name = new.target.name;
		this.code = code;
	}
}

export class InvalidArgumentError extends IoError {
	constructor(message: string) {
		super("INVAL", message);
	}
}

export class NotFoundError extends IoError {
	constructor(message: string) {
		super("NOENT", message);
	}
}

export class NoDeviceError extends IoError {
	constructor(message: string) {
		super("NODEV", message);
	}
}

export class BusyError extends IoError {
	constructor(message: string) {
		super("BUSY", message);
	}
}

export class AgainError extends IoError {
	constructor(message: string) {
		super("AGAIN", message);
	}
}

export class TransportError extends IoError {
	constructor(message: string) {
		super("IO", message);
	}
}

export class NotSupportedError extends IoError {
	constructor(message: string) {
		super("NOSYS", message);
	}
}

export class NoMemoryError extends IoError {
	constructor(message: string) {
		super("NOMEM", message);
	}
}

/** Use of a device handle after its scope closed it. */
export class ClosedError extends Error {
	constructor(message: string) {
		super(message);
		this.name = "ClosedError";
	}
}

/** The CLI rejected the invocation itself (exit code 1). */
export class UsageError extends Error {
	constructor(message: string) {
		super(message);
		this.name = "UsageError";
	}
}

/** A command completed with a nonzero device status. */
export class DeviceStatusError extends Error {
	public readonly statusClass: StatusClass;
	public readonly status: number;

	constructor(statusClass: StatusClass, status: number, message: string) {
		super(message);
		this.name = "DeviceStatusError";
		this.statusClass = statusClass;
		this.status = status;
	}
}

const ERROR_CTORS: Record<ErrorClass, new (message: string) => IoError> = {
	INVAL: InvalidArgumentError,
	NOENT: NotFoundError,
	NODEV: NoDeviceError,
	BUSY: BusyError,
	AGAIN: AgainError,
	IO: TransportError,
	NOSYS: NotSupportedError,
	NOMEM: NoMemoryError,
};

const SUBMISSION_RE = /error\[([A-Z]+)\]:\s*(.*)/;
const STATUS_RE = /error\[STATUS:([a-z]+)\]:\s*(.*?)\s*\(status=0x([0-9a-fA-F]+)\)/;
const USAGE_RE = /usage error:\s*(.*)/;

/**
 * Translate one xio stderr diagnostic into the matching native error.
 * Unrecognized diagnostics map to TransportError so a failing exit code
 * never passes silently.
 */
export function errorFromStderr(stderr: string, exitCode: number): Error {
	const statusMatch = stderr.match(STATUS_RE);
	if (statusMatch) {
		return new DeviceStatusError(
			statusMatch[1] as StatusClass,
			parseInt(statusMatch[3], 16),
			statusMatch[2],
		);
	}
	const usageMatch = stderr.match(USAGE_RE);
	if (usageMatch) {
		return new UsageError(usageMatch[1]);
	}
	const subMatch = stderr.match(SUBMISSION_RE);
	if (subMatch && subMatch[1] in ERROR_CTORS) {
		return new ERROR_CTORS[subMatch[1] as ErrorClass](subMatch[2]);
	}
	return new TransportError(
		`xio exited ${exitCode}: ${stderr.trim() || "no diagnostic"}`,
	);
}
