from PIL import ImageDraw
import matplotlib.pyplot as plt
canvas = image_clue_0.copy()
draw = ImageDraw.Draw(canvas)
# box the candidate by hand
draw.rectangle([120, 40, 260, 150], outline='red', width=3)
draw.text((124, 20), 'candidate A', fill='red')
plt.imshow(canvas)
plt.show()
