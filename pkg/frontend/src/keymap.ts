/**
 * Keyboard mapping for simulated gaze: digits 1-4 attend stimulus 0-3,
 * digit 0 returns to rest. Everything else is ignored.
 */
export type GazeTarget = number | "rest";

export function keyToGaze(key: string): GazeTarget | null {
  switch (key) {
    case "0":
      return "rest";
    case "1":
      return 0;
    case "2":
      return 1;
    case "3":
      return 2;
    case "4":
      return 3;
    default:
      return null;
  }
}
