import { describe, expect, it } from "vitest";
import {
	decodeIdentify,
	decodeZoneReport,
	encodeIdentify,
	encodeZoneReport,
	type Geometry,
} from "../src/wire.js";

// Golden vectors shared verbatim with the core library's test suite;
// both sides must stay bit-exact against these hex strings.
const CONV_HEX = "00200000000000000002000000000000000000000000000000";
const ZONED_HEX = "00100000000000000002000004000000000400000000000001";
const ZONE_RECORD_HEX = "000400000000000006040000000000000100000000000000";

function fromHex(hex: string): Uint8Array {
	return new Uint8Array(Buffer.from(hex, "hex"));
}

describe("identify codec", () => {
	const conv: Geometry = {
		lbaNbytes: 512, nsect: 8192, nzones: 0, zoneNsect: 0, kind: "conventional",
	};
	const zoned: Geometry = {
		lbaNbytes: 512, nsect: 4096, nzones: 4, zoneNsect: 1024, kind: "zoned",
	};

	it("encodes the conventional golden vector", () => {
		expect(Buffer.from(encodeIdentify(conv)).toString("hex")).toBe(CONV_HEX);
	});

	it("encodes the zoned golden vector", () => {
		expect(Buffer.from(encodeIdentify(zoned)).toString("hex")).toBe(ZONED_HEX);
	});

	it("decodes both golden vectors", () => {
		expect(decodeIdentify(fromHex(CONV_HEX))).toEqual(conv);
		expect(decodeIdentify(fromHex(ZONED_HEX))).toEqual(zoned);
	});

	it("round-trips with zero-filled remainder", () => {
		const blob = encodeIdentify(zoned, 4096);
		expect(blob.length).toBe(4096);
		expect(blob.slice(25).every((b) => b === 0)).toBe(true);
		expect(decodeIdentify(blob)).toEqual(zoned);
	});

	it("rejects short payloads", () => {
		expect(() => decodeIdentify(new Uint8Array(10))).toThrow(RangeError);
	});
});

describe("zone report codec", () => {
	it("encodes one OPEN zone to the golden record bytes", () => {
		const blob = encodeZoneReport(1, [{ zslba: 1024, wp: 1030, state: "OPEN" }]);
		expect(Buffer.from(blob.slice(8)).toString("hex")).toBe(ZONE_RECORD_HEX);
	});

	it("round-trips a full report", () => {
		const zones = [
			{ zslba: 0, wp: 0, state: "EMPTY" as const },
			{ zslba: 1024, wp: 1030, state: "OPEN" as const },
			{ zslba: 2048, wp: 3072, state: "FULL" as const },
		];
		expect(decodeZoneReport(encodeZoneReport(3, zones))).toEqual({
			nzones: 3,
			zones,
		});
	});

	it("truncates decoding to the records that fit", () => {
		const blob = encodeZoneReport(4, [
			{ zslba: 0, wp: 1, state: "OPEN" },
			{ zslba: 1024, wp: 1024, state: "EMPTY" },
		]);
		const report = decodeZoneReport(blob);
		expect(report.nzones).toBe(4);
		expect(report.zones).toHaveLength(2);
	});

	it("rejects unknown zone states", () => {
		const blob = encodeZoneReport(1, [{ zslba: 0, wp: 0, state: "EMPTY" }]);
		blob[8 + 16] = 9;
		expect(() => decodeZoneReport(blob)).toThrow(RangeError);
	});
});
