export const WORDLE_MARKS = ["G", "Y", "-"];
/** Validate a wordle mark string before it is sent; returns null if ok. */
export function validateMarks(marks, length) {
    const text = marks.trim().toUpperCase();
    if (text.length !== length)
        return `need exactly ${length} marks`;
    for (const ch of text) {
        if (!WORDLE_MARKS.includes(ch))
            return `marks must be G, Y, or - (got '${ch}')`;
    }
    return null;
}
/** Validate mastermind peg counts before they are sent; returns null if ok. */
export function validatePegCounts(black, white, length) {
    if (!Number.isInteger(black) || !Number.isInteger(white))
        return "peg counts must be integers";
    if (black < 0 || white < 0)
        return "peg counts cannot be negative";
    if (black + white > length)
        return `black + white cannot exceed ${length}`;
    return null;
}
/** Validate a guess string against the session's code shape. */
export function validateGuess(guess, length) {
    const text = guess.trim().toUpperCase();
    if (text.length !== length)
        return `guess must have ${length} symbols`;
    if (!/^[0-9A-Z]+$/.test(text))
        return "guess must be alphanumeric";
    return null;
}
/** Wire encoding of feedback for the service. */
export function encodeFeedback(rule, marks, black, white) {
    return rule === "wordle" ? marks.trim().toUpperCase() : `${black},${white}`;
}
/** Cycle a wordle position toggle: - -> Y -> G -> -. */
export function nextMark(current) {
    const order = ["-", "Y", "G"];
    return order[(order.indexOf(current) + 1) % order.length];
}
