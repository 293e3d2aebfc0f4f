from PIL import ImageDraw
import matplotlib.pyplot as plt
canvas = image_clue_0.copy()
draw = ImageDraw.Draw(canvas)
draw.line([(40, 200), (300, 60)], fill='blue', width=2)
draw.line([(40, 60), (300, 200)], fill='blue', width=2)
plt.imshow(canvas)
plt.show()
