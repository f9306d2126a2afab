import { describe, expect, it } from "vitest";
import {
	AgainError,
	BusyError,
	DeviceStatusError,
	errorFromStderr,
	InvalidArgumentError,
	NoDeviceError,
	NotFoundError,
	NotSupportedError,
	TransportError,
	UsageError,
} from "../src/errors.js";

describe("stderr diagnostics to native errors", () => {
	it("maps each submission error class to its subclass", () => {
		const table: Array<[string, unknown]> = [
			["xio: error[INVAL]: bad thing", InvalidArgumentError],
			["xio: error[NOENT]: no such file", NotFoundError],
			["xio: error[NODEV]: backend 'x' is not registered", NoDeviceError],
			["xio: error[BUSY]: queue busy", BusyError],
			["xio: error[AGAIN]: retry", AgainError],
			["xio: error[IO]: transport", TransportError],
			["xio: error[NOSYS]: backend unavailable", NotSupportedError],
		];
		for (const [line, ctor] of table) {
			const err = errorFromStderr(line, 2);
			expect(err, line).toBeInstanceOf(ctor as never);
		}
	});

	it("keeps the human message", () => {
		const err = errorFromStderr("xio: error[NODEV]: backend 'nope' is not registered", 2);
		expect(err.message).toContain("'nope'");
	});

	it("decodes device-status failures with class and raw status", () => {
		const err = errorFromStderr(
			"xio: error[STATUS:range]: LBA out of range (status=0x0080)", 2,
		) as DeviceStatusError;
		expect(err).toBeInstanceOf(DeviceStatusError);
		expect(err.statusClass).toBe("range");
		expect(err.status).toBe(0x0080);
	});

	it("decodes zone-class statuses", () => {
		const err = errorFromStderr(
			"xio: error[STATUS:zone]: zone is full (status=0x01b9)", 2,
		) as DeviceStatusError;
		expect(err.statusClass).toBe("zone");
		expect(err.status).toBe(0x01b9);
	});

	it("maps usage errors", () => {
		expect(errorFromStderr("xio: usage error: --nblocks must be >= 1", 1))
			.toBeInstanceOf(UsageError);
	});

	it("falls back to TransportError for unknown noise", () => {
		expect(errorFromStderr("segfault?", 139)).toBeInstanceOf(TransportError);
	});
});
