/**
 * Thin runner around the xio binary: one invocation per call, JSON on
 * stdout, typed errors decoded from stderr and the exit code.
 */

import { execFile } from "node:child_process";
import { errorFromStderr } from "./errors.js";

/** Resolve the xio executable (XIO_BIN overrides PATH lookup). */
export function xioBinary(): string {
	return process.env.XIO_BIN ?? "xio";
}

export interface CliResult {
	stdout: string;
	stderr: string;
}

export function runXio(args: string[]): Promise<CliResult> {
	return new Promise((resolve, reject) => {
		execFile(
			xioBinary(),
			args,
			{ maxBuffer: 64 * 1024 * 1024 },
			(error, stdout, stderr) => {
				if (error) {
					if (typeof error.code === "number") {
						reject(errorFromStderr(stderr, error.code));
					} else {
						reject(
							new Error(`failed to spawn ${xioBinary()}: ${error.message}`),
						);
					}
					return;
				}
				resolve({ stdout, stderr });
			},
		);
	});
}

export async function runXioJson<T>(args: string[]): Promise<T> {
	const { stdout } = await runXio(args);
	return JSON.parse(stdout) as T;
}
