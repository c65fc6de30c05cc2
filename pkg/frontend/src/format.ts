/**
 * Display helpers. The UI never rounds or recomputes model numbers: a value
 * parsed from an API response is shown exactly as JavaScript prints it.
 */

export function formatValue(value: number): string {
  return String(value);
}

/** Quote a CSV field only when it needs quoting. */
export function csvField(text: string): string {
  if (/[",\n]/.test(text)) {
    return '"' + text.replace(/"/g, '""') + '"';
  }
  return text;
}
